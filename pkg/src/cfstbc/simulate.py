"""Deterministic Monte Carlo driver for BER and spectral-efficiency sweeps.

Every random draw flows through a substream keyed by (master_seed, trial,
BS index, user index, purpose), so trials are independent units whose
results do not depend on execution order. Sweeps aggregate per-trial
outputs in fixed chunk order, which makes serial and parallel runs of the
same configuration bit-identical.

Two scenario families are supported:

* dual-antenna users sending 4 symbols per two-slot code block through the
  Golden code, decoded per BS on the stacked equivalent channel;
* single-antenna users on the plain one-slot linear model y = sqrt(rho) G x + w,
  pushed through the same decoder machinery with an effective
  rho' = 2 rho so both the detector scale sqrt(rho'/2) = sqrt(rho) and the
  MMSE regularizer 2/rho' = 1/rho match that model exactly.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .channel import (
    ChannelRealization,
    draw_large_scale,
    draw_noise,
    draw_small_scale,
    received_block,
)
from .golden import encode, equivalent_channel, stack_system, vec
from .linalg import FlopCounter, convergence_margin
from .metrics import (
    NOISE_SNR_SCALED,
    BerEstimate,
    sinr_streams,
    spectral_efficiency,
)
from .receiver import (
    CONSTELLATIONS,
    Constellation,
    DecoderMatrix,
    Inversion,
    mmse_matrix,
    per_bs_soft,
    cpu_combine,
    detect,
    zf_matrix,
)

PURPOSES = {"beta": 1, "channel": 2, "noise": 3, "bits": 4}

# Trials per work unit; fixed so chunk boundaries (and therefore float
# reduction order) never depend on the worker count.
TRIAL_CHUNK = 256


class ConfigError(ValueError):
    """Invalid scenario configuration; carries every violation found."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def trial_rng(
    master_seed: int, trial: int, l: int, k: int, purpose: str
) -> np.random.Generator:
    """Independent substream for one (trial, BS, user, purpose) key.

    Streams are derived through ``numpy.random.SeedSequence``, which is
    collision-resistant and platform-stable.
    """
    code = PURPOSES[purpose]
    ss = np.random.SeedSequence((master_seed, trial, l, k, code))
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class ScenarioConfig:
    """Full experiment description for one sweep."""

    L: int = 4
    M: int = 64
    K: int = 4
    antennas_per_user: int = 2
    modulation: str = "bpsk"
    decoder: str = "zf"
    inversion: Inversion = field(default_factory=Inversion.exact)
    snr_grid_db: tuple[float, ...] = ()
    rho_fixed: float = 10.0
    m_grid: tuple[int, ...] = ()
    trials: int = 100
    master_seed: int = 0
    noise_scale: float = 1.0
    margin_trials: int = 128
    noise_term: str = NOISE_SNR_SCALED

    @property
    def constellation(self) -> Constellation:
        return CONSTELLATIONS[self.modulation]

    def bits_per_trial(self) -> int:
        """Payload bits carried by one code block (or slot) across all users."""
        bps = self.constellation.bits_per_symbol
        symbols = 4 if self.antennas_per_user == 2 else 1
        return self.K * symbols * bps

    def bits_per_user_per_slot(self) -> float:
        """Rate-fairness figure: payload bits per user per time slot."""
        bps = self.constellation.bits_per_symbol
        if self.antennas_per_user == 2:
            return 4 * bps / 2.0
        return float(bps)

    def _rank_violation(self, m: int) -> str | None:
        if self.decoder != "zf":
            return None
        if self.antennas_per_user == 2 and 2 * m < 4 * self.K:
            return (
                f"ZF with dual-antenna users needs 2M >= 4K, "
                f"got M={m}, K={self.K}"
            )
        if self.antennas_per_user == 1 and m < self.K:
            return f"ZF with single-antenna users needs M >= K, got M={m}, K={self.K}"
        return None

    def validate(self, kind: str) -> list[str]:
        """Collect every violation for a 'ber' or 'se' run (empty if valid)."""
        problems = []
        for name in ("L", "M", "K"):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.antennas_per_user not in (1, 2):
            problems.append(
                f"antennas_per_user must be 1 or 2, got {self.antennas_per_user}"
            )
        if self.modulation not in CONSTELLATIONS:
            problems.append(
                f"modulation must be one of {sorted(CONSTELLATIONS)}, "
                f"got {self.modulation!r}"
            )
        if self.decoder not in ("zf", "mmse"):
            problems.append(f"decoder must be 'zf' or 'mmse', got {self.decoder!r}")
        if self.trials < 1:
            problems.append(f"trials must be >= 1, got {self.trials}")
        if self.master_seed < 0:
            problems.append(f"master_seed must be >= 0, got {self.master_seed}")
        if self.noise_scale < 0:
            problems.append(f"noise_scale must be >= 0, got {self.noise_scale}")
        if self.margin_trials < 1:
            problems.append(f"margin_trials must be >= 1, got {self.margin_trials}")
        if kind == "ber":
            if not self.snr_grid_db:
                problems.append("snr_grid_db must be non-empty for a BER sweep")
            violation = self._rank_violation(self.M)
            if violation:
                problems.append(violation)
        elif kind == "se":
            if not self.m_grid:
                problems.append("m_grid must be non-empty for an SE sweep")
            if self.rho_fixed <= 0:
                problems.append(f"rho_fixed must be positive, got {self.rho_fixed}")
            for m in self.m_grid:
                violation = self._rank_violation(m)
                if violation:
                    problems.append(violation)
                    break
        else:
            problems.append(f"unknown run kind {kind!r}")
        return problems

    def echo(self) -> dict[str, str]:
        """Flat string form of every field, for result metadata."""
        out = {}
        for name in (
            "L",
            "M",
            "K",
            "antennas_per_user",
            "modulation",
            "decoder",
        ):
            out[name] = str(getattr(self, name))
        out["inversion"] = self.inversion.label
        out["snr_grid_db"] = ",".join(f"{v:g}" for v in self.snr_grid_db)
        out["rho_fixed"] = f"{self.rho_fixed:g}"
        out["m_grid"] = ",".join(str(v) for v in self.m_grid)
        for name in ("trials", "master_seed", "noise_scale", "margin_trials"):
            out[name] = f"{getattr(self, name):g}"
        out["noise_term"] = self.noise_term
        return out


@dataclass(frozen=True)
class BerPoint:
    snr_db: float
    estimate: BerEstimate
    conv_margin_mean: float
    complex_mults: int
    complex_divs: int
    complex_adds: int


@dataclass(frozen=True)
class SePoint:
    m: int
    se_mean_per_user: float
    se_sum: float
    conv_margin_mean: float
    complex_mults: int
    complex_divs: int
    complex_adds: int


@dataclass(frozen=True)
class RunResult:
    kind: str
    config: ScenarioConfig
    points: tuple
    wall_time_s: float


def trials_for_bits(cfg: ScenarioConfig, target_bits: int) -> int:
    """Trials per grid point needed to accumulate at least ``target_bits``."""
    per_trial = cfg.bits_per_trial()
    return -(-target_bits // per_trial)


def _build_decoder(
    cfg: ScenarioConfig, G: np.ndarray, rho: float, counter: FlopCounter
) -> DecoderMatrix:
    if cfg.decoder == "zf":
        return zf_matrix(G, cfg.inversion, counter)
    return mmse_matrix(G, rho, cfg.inversion, counter)


def _draw_channels(cfg: ScenarioConfig, m: int, trial: int) -> ChannelRealization:
    profile = draw_large_scale(
        cfg.L, cfg.K, trial_rng(cfg.master_seed, trial, 0, 0, "beta")
    )
    h = np.empty((cfg.L, cfg.K, m, cfg.antennas_per_user), dtype=complex)
    for l in range(cfg.L):
        for k in range(cfg.K):
            h[l, k] = draw_small_scale(
                m,
                cfg.antennas_per_user,
                trial_rng(cfg.master_seed, trial, l, k, "channel"),
            )
    return ChannelRealization(h=h, profile=profile)


def _draw_bits(cfg: ScenarioConfig, trial: int, symbols_per_user: int) -> np.ndarray:
    bps = cfg.constellation.bits_per_symbol
    bits = np.empty((cfg.K, symbols_per_user * bps), dtype=np.uint8)
    for k in range(cfg.K):
        rng = trial_rng(cfg.master_seed, trial, 0, k, "bits")
        bits[k] = rng.integers(0, 2, size=symbols_per_user * bps)
    return bits


def _dual_trial(
    cfg: ScenarioConfig,
    rho: float,
    trial: int,
    counter: FlopCounter,
    want_margin: bool,
) -> tuple[int, int, list[float]]:
    """One Golden-code block through the full chain; returns (errors, bits, margins)."""
    const = cfg.constellation
    channels = _draw_channels(cfg, cfg.M, trial)
    tx_bits = _draw_bits(cfg, trial, symbols_per_user=4)
    x = np.stack([const.modulate(tx_bits[k]) for k in range(cfg.K)])
    codes = encode(x)

    soft, gains, margins = [], [], []
    for l in range(cfg.L):
        noise = draw_noise(cfg.M, 2, trial_rng(cfg.master_seed, trial, l, 0, "noise"))
        if cfg.noise_scale != 1.0:
            noise = noise * cfg.noise_scale
        Y = received_block(channels, codes, rho, noise, l)
        G = stack_system(equivalent_channel(channels.h[l]), channels.profile.betas[l])
        dec = _build_decoder(cfg, G, rho, counter)
        s, gvec = per_bs_soft(dec, vec(Y))
        soft.append(s)
        gains.append(gvec)
        if want_margin:
            margins.append(convergence_margin(dec.gram).value)

    r, g = cpu_combine(soft, gains)
    rx_bits = const.demodulate(detect(r, g, rho, const))
    errors = int(np.count_nonzero(rx_bits != tx_bits.reshape(-1)))
    return errors, tx_bits.size, margins


def _single_trial(
    cfg: ScenarioConfig,
    rho: float,
    trial: int,
    counter: FlopCounter,
    want_margin: bool,
) -> tuple[int, int, list[float]]:
    """One slot of the single-antenna baseline chain."""
    const = cfg.constellation
    channels = _draw_channels(cfg, cfg.M, trial)
    tx_bits = _draw_bits(cfg, trial, symbols_per_user=1)
    x = np.concatenate([const.modulate(tx_bits[k]) for k in range(cfg.K)])
    rho_eff = 2.0 * rho

    soft, gains, margins = [], [], []
    for l in range(cfg.L):
        G = channels.h[l, :, :, 0].T * channels.profile.betas[l][None, :]
        w = draw_noise(cfg.M, 1, trial_rng(cfg.master_seed, trial, l, 0, "noise"))[:, 0]
        if cfg.noise_scale != 1.0:
            w = w * cfg.noise_scale
        y = np.sqrt(rho) * (G @ x) + w
        dec = _build_decoder(cfg, G, rho_eff, counter)
        s, gvec = per_bs_soft(dec, y)
        soft.append(s)
        gains.append(gvec)
        if want_margin:
            margins.append(convergence_margin(dec.gram).value)

    r, g = cpu_combine(soft, gains)
    rx_bits = const.demodulate(detect(r, g, rho_eff, const))
    errors = int(np.count_nonzero(rx_bits != tx_bits.reshape(-1)))
    return errors, tx_bits.size, margins


def _ber_chunk(cfg: ScenarioConfig, snr_db: float, lo: int, hi: int) -> dict:
    rho = 10.0 ** (snr_db / 10.0)
    run_trial = _dual_trial if cfg.antennas_per_user == 2 else _single_trial
    counter = FlopCounter()
    errors = bits = 0
    margin_sum = 0.0
    margin_count = 0
    for t in range(lo, hi):
        e, b, margins = run_trial(cfg, rho, t, counter, t < cfg.margin_trials)
        errors += e
        bits += b
        margin_sum += sum(margins)
        margin_count += len(margins)
    return {
        "errors": errors,
        "bits": bits,
        "margin_sum": margin_sum,
        "margin_count": margin_count,
        "mults": counter.complex_mults,
        "divs": counter.complex_divs,
        "adds": counter.complex_adds,
    }


def _se_trial(
    cfg: ScenarioConfig, m: int, trial: int, counter: FlopCounter, want_margin: bool
) -> tuple[float, list[float]]:
    """Per-user SE summed over users for one channel realization."""
    rho = cfg.rho_fixed
    channels = _draw_channels(cfg, m, trial)
    a_mats, g_mats, margins = [], [], []
    dual = cfg.antennas_per_user == 2
    rho_machinery = rho if dual else 2.0 * rho
    for l in range(cfg.L):
        if dual:
            G = stack_system(
                equivalent_channel(channels.h[l]), channels.profile.betas[l]
            )
        else:
            G = channels.h[l, :, :, 0].T * channels.profile.betas[l][None, :]
        dec = _build_decoder(cfg, G, rho_machinery, counter)
        a_mats.append(dec.A)
        g_mats.append(G)
        if want_margin:
            margins.append(convergence_margin(dec.gram).value)
    streams = sinr_streams(a_mats, g_mats, rho_machinery, cfg.noise_term)
    if dual:
        se_total = sum(
            spectral_efficiency(streams[4 * k : 4 * k + 4]) for k in range(cfg.K)
        )
    else:
        se_total = float(np.sum(np.log2(1.0 + streams)))
    return se_total, margins


def _se_chunk(cfg: ScenarioConfig, m: int, lo: int, hi: int) -> dict:
    counter = FlopCounter()
    se_sum = 0.0
    margin_sum = 0.0
    margin_count = 0
    for t in range(lo, hi):
        se_total, margins = _se_trial(cfg, m, t, counter, t < cfg.margin_trials)
        se_sum += se_total
        margin_sum += sum(margins)
        margin_count += len(margins)
    return {
        "se_sum": se_sum,
        "margin_sum": margin_sum,
        "margin_count": margin_count,
        "mults": counter.complex_mults,
        "divs": counter.complex_divs,
        "adds": counter.complex_adds,
    }


def _chunk_ranges(trials: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + TRIAL_CHUNK, trials)) for lo in range(0, trials, TRIAL_CHUNK)]


def _map_chunks(
    fn: Callable,
    cfg: ScenarioConfig,
    value,
    trials: int,
    executor: ProcessPoolExecutor | None,
) -> Iterable[dict]:
    ranges = _chunk_ranges(trials)
    if executor is None:
        return [fn(cfg, value, lo, hi) for lo, hi in ranges]
    return list(
        executor.map(
            fn,
            [cfg] * len(ranges),
            [value] * len(ranges),
            [lo for lo, _ in ranges],
            [hi for _, hi in ranges],
        )
    )


def _margin_mean(partials: Iterable[dict]) -> float:
    total = sum(p["margin_sum"] for p in partials)
    count = sum(p["margin_count"] for p in partials)
    return total / count if count else float("nan")


def run_ber_sweep(
    cfg: ScenarioConfig,
    workers: int = 1,
    progress: Callable[[BerPoint], None] | None = None,
) -> RunResult:
    """Monte Carlo BER over the configured SNR grid.

    ``workers > 1`` spreads trial chunks over a process pool; results are
    identical to the serial run because partials are reduced in chunk order.
    """
    problems = cfg.validate("ber")
    if problems:
        raise ConfigError(problems)
    start = time.perf_counter()
    points = []
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for snr_db in cfg.snr_grid_db:
            partials = _map_chunks(_ber_chunk, cfg, float(snr_db), cfg.trials, executor)
            estimate = BerEstimate.from_counts(
                sum(p["errors"] for p in partials), sum(p["bits"] for p in partials)
            )
            point = BerPoint(
                snr_db=float(snr_db),
                estimate=estimate,
                conv_margin_mean=_margin_mean(partials),
                complex_mults=sum(p["mults"] for p in partials),
                complex_divs=sum(p["divs"] for p in partials),
                complex_adds=sum(p["adds"] for p in partials),
            )
            points.append(point)
            if progress is not None:
                progress(point)
    finally:
        if executor is not None:
            executor.shutdown()
    return RunResult(
        kind="ber",
        config=cfg,
        points=tuple(points),
        wall_time_s=time.perf_counter() - start,
    )


def run_se_sweep(
    cfg: ScenarioConfig,
    workers: int = 1,
    progress: Callable[[SePoint], None] | None = None,
) -> RunResult:
    """Mean spectral efficiency over the configured BS-antenna grid."""
    problems = cfg.validate("se")
    if problems:
        raise ConfigError(problems)
    start = time.perf_counter()
    points = []
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for m in cfg.m_grid:
            partials = _map_chunks(_se_chunk, cfg, int(m), cfg.trials, executor)
            se_sum = sum(p["se_sum"] for p in partials) / cfg.trials
            point = SePoint(
                m=int(m),
                se_mean_per_user=se_sum / cfg.K,
                se_sum=se_sum,
                conv_margin_mean=_margin_mean(partials),
                complex_mults=sum(p["mults"] for p in partials),
                complex_divs=sum(p["divs"] for p in partials),
                complex_adds=sum(p["adds"] for p in partials),
            )
            points.append(point)
            if progress is not None:
                progress(point)
    finally:
        if executor is not None:
            executor.shutdown()
    return RunResult(
        kind="se",
        config=cfg,
        points=tuple(points),
        wall_time_s=time.perf_counter() - start,
    )


def desk_ber_config(**overrides) -> ScenarioConfig:
    """CI-speed BER scenario: M=64, K=4, L=4, -10..10 dB."""
    base = ScenarioConfig(
        L=4,
        M=64,
        K=4,
        snr_grid_db=tuple(float(v) for v in range(-10, 12, 2)),
        trials=200,
    )
    return replace(base, **overrides)


def full_ber_config(**overrides) -> ScenarioConfig:
    """Large BER scenario (M=256, K=10); hours-scale, not run in CI."""
    base = ScenarioConfig(
        L=4,
        M=256,
        K=10,
        snr_grid_db=tuple(float(v) for v in range(-10, 12, 2)),
        trials=2500,
        inversion=Inversion.neumann(2),
    )
    return replace(base, **overrides)


def se_sweep_config(**overrides) -> ScenarioConfig:
    """SE-versus-M scenario: K=10, rho=10, M from 50 to 500."""
    base = ScenarioConfig(
        L=4,
        K=10,
        rho_fixed=10.0,
        m_grid=tuple(range(50, 550, 50)),
        trials=100,
    )
    return replace(base, **overrides)
