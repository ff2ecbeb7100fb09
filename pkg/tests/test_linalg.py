import numpy as np
import pytest

from cfstbc import (
    DegenerateSplitError,
    FlopCounter,
    SingularMatrixError,
    convergence_margin,
    exact_inverse,
    gram,
    neumann_inverse,
    neumann_r2,
    split_diag,
)
from helpers import counted_cholesky_inverse, draw_system, gram_loop, random_hpd

Z22 = np.array([[2.0, 1.0], [1.0, 2.0]], dtype=complex)


class TestGram:
    def test_identity(self):
        np.testing.assert_array_equal(gram(np.eye(2, dtype=complex)), np.eye(2))

    def test_hand_column(self):
        G = np.array([[1.0], [1.0j]])
        np.testing.assert_allclose(gram(G), [[2.0]])

    def test_matches_loop_oracle(self):
        G = draw_system(M=64, K=2, seed=11)
        assert G.shape == (128, 8)
        np.testing.assert_allclose(gram(G), gram_loop(G), atol=1e-10)

    @pytest.mark.parametrize("seed", range(8))
    def test_hermitian_and_psd(self, seed):
        G = draw_system(M=16, K=2, seed=seed)
        Z = gram(G)
        scale = np.abs(Z).max()
        assert np.max(np.abs(Z - Z.conj().T)) < 1e-12 * scale
        assert np.linalg.eigvalsh(Z).min() > -1e-10 * scale

    def test_rejects_wide_matrix(self):
        with pytest.raises(ValueError, match="rows"):
            gram(np.ones((2, 3), dtype=complex))


class TestExactInverse:
    def test_diagonal(self):
        np.testing.assert_allclose(
            exact_inverse(np.diag([2.0, 4.0]).astype(complex)),
            np.diag([0.5, 0.25]),
            atol=1e-15,
        )

    def test_closed_form_2x2(self):
        expected = np.array([[2.0, -1.0], [-1.0, 2.0]]) / 3.0
        np.testing.assert_allclose(exact_inverse(Z22), expected, atol=1e-14)

    def test_residual_on_seeded_gram(self):
        Z = gram(draw_system(M=32, K=2, seed=5))
        assert Z.shape == (8, 8)
        residual = np.linalg.norm(Z @ exact_inverse(Z) - np.eye(8))
        assert residual < 1e-10

    @pytest.mark.parametrize("seed", range(6))
    def test_residual_random_hpd(self, seed):
        n = 24
        Z = random_hpd(n, seed, spread=3.0)
        assert np.linalg.cond(Z) < 1e6
        assert np.linalg.norm(Z @ exact_inverse(Z) - np.eye(n)) < 1e-10 * n

    def test_nonpositive_pivot_reports_index(self):
        Z = np.diag([1.0, -1.0, 2.0]).astype(complex)
        with pytest.raises(SingularMatrixError) as err:
            exact_inverse(Z)
        assert err.value.pivot == 1

    def test_indefinite_matrix_rejected(self):
        with pytest.raises(SingularMatrixError):
            exact_inverse(np.array([[1.0, 2.0], [2.0, 1.0]], dtype=complex))

    @pytest.mark.parametrize("n", [3, 5, 8])
    def test_flop_formula_matches_instrumented_oracle(self, n):
        Z = random_hpd(n, seed=n)
        counter = FlopCounter()
        Zinv = exact_inverse(Z, counter)
        oracle_inv, mults, divs, adds = counted_cholesky_inverse(Z)
        np.testing.assert_allclose(Zinv, oracle_inv, atol=1e-12)
        assert counter.complex_mults == mults
        assert counter.complex_divs == divs
        assert counter.complex_adds == adds


class TestSplitDiag:
    def test_identity(self):
        split = split_diag(np.eye(3, dtype=complex))
        np.testing.assert_array_equal(split.D, np.eye(3))
        np.testing.assert_array_equal(split.E, np.zeros((3, 3)))

    def test_hand_2x2(self):
        split = split_diag(Z22)
        np.testing.assert_array_equal(split.D, np.diag([2.0, 2.0]))
        np.testing.assert_array_equal(split.E, [[0.0, 1.0], [1.0, 0.0]])

    def test_reconstruction_is_exact(self):
        Z = gram(draw_system(M=16, K=2, seed=3))
        split = split_diag(Z)
        np.testing.assert_array_equal(split.D + split.E, Z)
        assert np.all(np.diagonal(split.E) == 0)

    def test_zero_diagonal_entry(self):
        Z = Z22.copy()
        Z[0, 0] = 0.0
        with pytest.raises(DegenerateSplitError) as err:
            split_diag(Z)
        assert err.value.index == 0


class TestNeumannInverse:
    def test_diagonal_exact_any_order(self):
        Z = np.diag([2.0, 5.0, 0.5]).astype(complex)
        for R in (1, 2, 7):
            np.testing.assert_allclose(
                neumann_inverse(Z, R), np.diag([0.5, 0.2, 2.0]), atol=1e-15
            )

    def test_hand_expansion_r2(self):
        expected = np.array([[0.5, -0.25], [-0.25, 0.5]])
        np.testing.assert_allclose(neumann_inverse(Z22, 2), expected, atol=1e-15)

    def test_series_limit_matches_exact(self):
        # spectral ratio is 0.5 here, so 50 terms are plenty
        np.testing.assert_allclose(
            neumann_inverse(Z22, 50), exact_inverse(Z22), atol=1e-10
        )

    def test_order_must_be_positive(self):
        with pytest.raises(ValueError):
            neumann_inverse(Z22, 0)

    def test_propagates_degenerate_split(self):
        Z = Z22.copy()
        Z[1, 1] = 0.0
        with pytest.raises(DegenerateSplitError):
            neumann_inverse(Z, 2)


class TestNeumannR2:
    def test_identity(self):
        np.testing.assert_array_equal(neumann_r2(np.eye(4, dtype=complex)), np.eye(4))

    def test_hand_2x2(self):
        np.testing.assert_allclose(
            neumann_r2(Z22), [[0.5, -0.25], [-0.25, 0.5]], atol=1e-15
        )

    @pytest.mark.parametrize("seed", range(100))
    def test_equals_generic_order_two(self, seed):
        Z = gram(draw_system(M=64, K=10, seed=seed))
        assert Z.shape == (40, 40)
        delta = np.abs(neumann_r2(Z) - neumann_inverse(Z, 2))
        assert delta.max() < 1e-13


class TestConvergenceMargin:
    def test_diagonal_gives_zero(self):
        est = convergence_margin(np.diag([3.0, 1.0]).astype(complex))
        assert est.value == 0.0 and est.converged

    def test_hand_value_half(self):
        est = convergence_margin(Z22)
        assert abs(est.value - 0.5) < 1e-6
        assert est.converged

    def test_divergent_regime(self):
        est = convergence_margin(np.array([[1.0, 2.0], [2.0, 1.0]], dtype=complex))
        assert abs(est.value - 2.0) < 1e-6

    def test_budget_exhaustion_is_flagged(self):
        est = convergence_margin(Z22, iters=2)
        assert not est.converged
        assert est.value > 0

    def test_float_conversion(self):
        assert float(convergence_margin(Z22)) == pytest.approx(0.5, abs=1e-6)


class TestSeriesConvergenceRate:
    @pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
    def test_error_shrinks_geometrically(self, seed):
        """Truncation error decays at least at the q^R rate.

        The spectrum of D^-1 E carries near-degenerate +/- pairs whose
        cross terms make the Frobenius error oscillate between odd and
        even orders, so the decrease is asserted two steps apart. The
        fitted slope can only be steeper than log q at finite R (the bulk
        modes decay faster), hence the one-sided bound.
        """
        Z = gram(draw_system(M=64, K=4, seed=seed))
        q = convergence_margin(Z, iters=4000, tol=1e-12).value
        assert q < 1.0
        Zinv = exact_inverse(Z)
        errors = np.array(
            [np.linalg.norm(neumann_inverse(Z, R) - Zinv) for R in range(1, 9)]
        )
        assert np.all(errors[2:] < errors[:-2])
        assert errors[-1] < errors[0]
        slope = np.polyfit(np.arange(1, 9), np.log(errors), 1)[0]
        assert slope <= np.log(q) + 0.1
        # errors <= C q^R holds with the fitted constant staying modest
        C = np.max(errors / q ** np.arange(1, 9))
        assert C < 10.0 * errors[0]


class TestFlopOrdering:
    @pytest.mark.parametrize("n", [16, 24, 40])
    def test_r2_cheaper_than_exact(self, n):
        Z = random_hpd(n, seed=n)
        fast, slow = FlopCounter(), FlopCounter()
        neumann_r2(Z, fast)
        exact_inverse(Z, slow)
        assert fast.complex_mults < slow.complex_mults

    def test_counter_merge_and_guard(self):
        counter = FlopCounter()
        counter.add(mults=3, divs=1)
        other = FlopCounter(complex_mults=2, complex_adds=5)
        counter.merge(other)
        assert (counter.complex_mults, counter.complex_divs, counter.complex_adds) == (
            5,
            1,
            5,
        )
        with pytest.raises(ValueError):
            counter.add(mults=-1)
