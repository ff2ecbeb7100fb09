"""Shared fixtures-in-spirit: seeded system draws and loop-level oracles."""

import numpy as np

from cfstbc import draw_large_scale, draw_small_scale, equivalent_channel, stack_system


def seeded_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_complex(rng: np.random.Generator, *shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def draw_system(M: int, K: int, seed: int) -> np.ndarray:
    """One beta-scaled stacked receive matrix (2M x 4K) from seeded draws."""
    rng = seeded_rng(seed)
    profile = draw_large_scale(1, K, rng)
    h_tildes = np.stack(
        [equivalent_channel(draw_small_scale(M, 2, rng)) for _ in range(K)]
    )
    return stack_system(h_tildes, profile.betas[0])


def gram_loop(G: np.ndarray) -> np.ndarray:
    """Entry-by-entry double-loop Gram product, the independent oracle."""
    rows, cols = G.shape
    Z = np.zeros((cols, cols), dtype=complex)
    for i in range(cols):
        for j in range(cols):
            acc = 0j
            for r in range(rows):
                acc += np.conj(G[r, i]) * G[r, j]
            Z[i, j] = acc
    return Z


def counted_cholesky_inverse(Z: np.ndarray):
    """Instrumented textbook Cholesky inverse counting every complex op.

    Factor Z = L L^H, then dense forward/back substitution against the
    identity. Returns (Z^{-1}, mults, divs, adds).
    """
    n = Z.shape[0]
    mults = divs = adds = 0
    L = np.zeros((n, n), dtype=complex)
    for j in range(n):
        acc = Z[j, j]
        for k in range(j):
            acc = acc - L[j, k] * np.conj(L[j, k])
            mults += 1
            adds += 1
        L[j, j] = np.sqrt(acc.real)
        for i in range(j + 1, n):
            acc = Z[i, j]
            for k in range(j):
                acc = acc - L[i, k] * np.conj(L[j, k])
                mults += 1
                adds += 1
            L[i, j] = acc / L[j, j]
            divs += 1
    Y = np.zeros((n, n), dtype=complex)
    for col in range(n):
        for i in range(n):
            acc = 1.0 + 0j if i == col else 0j
            for k in range(i):
                acc = acc - L[i, k] * Y[k, col]
                mults += 1
                adds += 1
            Y[i, col] = acc / L[i, i]
            divs += 1
    X = np.zeros((n, n), dtype=complex)
    for col in range(n):
        for i in range(n - 1, -1, -1):
            acc = Y[i, col]
            for k in range(i + 1, n):
                acc = acc - np.conj(L[k, i]) * X[k, col]
                mults += 1
                adds += 1
            X[i, col] = acc / np.conj(L[i, i])
            divs += 1
    return X, mults, divs, adds


def random_hpd(n: int, seed: int, spread: float = 1.0) -> np.ndarray:
    """Random Hermitian positive definite matrix with moderate conditioning."""
    rng = seeded_rng(seed)
    Q = np.linalg.qr(random_complex(rng, n, n))[0]
    eigs = np.exp(spread * rng.uniform(-1.0, 1.0, n))
    return (Q * eigs) @ Q.conj().T
