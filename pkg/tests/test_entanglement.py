import numpy as np
import pytest

from qconserve import (
    SpaceLayout,
    StateVector,
    apply_unitary,
    disentangling_unitary,
    entropy,
    entropy_report,
    epsilon_entropy_approx,
    schmidt,
    two_branch_entropy_exact,
    two_branch_state,
)


def haar_unitary(dim, rng):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state(layout, rng):
    amps = rng.normal(size=layout.total_dimension) + 1j * rng.normal(
        size=layout.total_dimension
    )
    return StateVector(layout, amps / np.linalg.norm(amps))


def scalar_entropy(lams):
    lams = np.asarray(lams, dtype=float)
    lams = lams[lams > 0]
    return float(-np.sum(lams * np.log(lams)))


class TestEntropy:
    def test_product_state_zero(self):
        lay = SpaceLayout([("a", 2), ("b", 2)])
        psi = StateVector(lay, np.kron([1, 0], [1, 1] / np.sqrt(2)))
        assert entropy(psi, 1) == pytest.approx(0.0, abs=1e-10)

    def test_bell_ln2(self):
        lay = SpaceLayout([("a", 2), ("b", 2)])
        bell = StateVector(lay, np.array([1, 0, 0, 1]) / np.sqrt(2))
        assert entropy(bell, 1) == pytest.approx(np.log(2), abs=1e-10)

    def test_two_branch_eps_001_scalar_oracle(self):
        # eigenvalues (1 +/- (1 - eps))/2 = (0.995, 0.005); the oracle is
        # the scalar -sum(lam ln lam)
        oracle = scalar_entropy([0.995, 0.005])
        psi = two_branch_state(0.99, 1 / np.sqrt(2), 1 / np.sqrt(2))
        assert entropy(psi, 1) == pytest.approx(oracle, abs=1e-12)
        assert oracle == pytest.approx(0.0314791, abs=1e-6)

    def test_zero_iff_rank_one(self):
        rng = np.random.default_rng(0)
        lay = SpaceLayout([("a", 3), ("b", 3)])
        for _ in range(20):
            psi = random_state(lay, rng)
            s = entropy(psi, 1)
            rank = schmidt(psi, 1).rank
            assert s >= -1e-12
            if rank == 1:
                assert s <= 1e-10
            else:
                assert s > 1e-10

    def test_bounded_by_log_min_dimension(self):
        rng = np.random.default_rng(1)
        lay = SpaceLayout([("a", 3), ("b", 7)])
        for _ in range(20):
            psi = random_state(lay, rng)
            assert entropy(psi, 1) <= np.log(3) + 1e-9


class TestEpsilonApprox:
    def test_limit_zero(self):
        assert epsilon_entropy_approx(0.0) == 0.0

    def test_paper_value_001(self):
        # (eps/2)(1 - ln(eps/2)) at eps = 0.01
        got = epsilon_entropy_approx(0.01)
        assert got == pytest.approx(0.005 * (1 - np.log(0.005)), abs=1e-15)
        assert got == pytest.approx(0.0314916, abs=1e-6)

    def test_eps_02_against_entropy_oracle(self):
        got = epsilon_entropy_approx(0.2)
        assert got == pytest.approx(0.3302585, abs=1e-6)
        exact = scalar_entropy([0.9, 0.1])
        assert exact == pytest.approx(0.325083, abs=1e-6)
        rel = (got - exact) / exact
        assert rel == pytest.approx(0.016, abs=2e-3)

    def test_small_eps_within_01_percent(self):
        for eps in (0.01, 1e-3, 1e-4):
            rep = entropy_report(eps)
            assert abs(rep.relative_error) <= 1e-3

    def test_degrades_monotonically(self):
        errs = [
            abs(entropy_report(e).relative_error) for e in (0.01, 0.1, 0.2)
        ]
        assert errs[0] < errs[1] < errs[2]

    def test_one_sided_bound_on_grid(self):
        # approx >= exact over the tested grid (regression property)
        for eps in np.linspace(1e-4, 0.2, 25):
            assert epsilon_entropy_approx(eps) >= two_branch_entropy_exact(eps)

    def test_domain(self):
        with pytest.raises(ValueError):
            epsilon_entropy_approx(-0.1)
        with pytest.raises(ValueError):
            epsilon_entropy_approx(1.5)


class TestTwoBranchState:
    def test_identical_pointers_product(self):
        psi = two_branch_state(1.0, 1 / np.sqrt(2), 1 / np.sqrt(2))
        assert entropy(psi, 1) == pytest.approx(0.0, abs=1e-10)

    def test_orthogonal_pointers_bell(self):
        psi = two_branch_state(0.0, 1 / np.sqrt(2), 1 / np.sqrt(2))
        assert entropy(psi, 1) == pytest.approx(np.log(2), abs=1e-10)

    def test_schmidt_eigenvalues_closed_form(self):
        g = 0.99
        psi = two_branch_state(g, 1 / np.sqrt(2), 1 / np.sqrt(2))
        lams = schmidt(psi, 1).coefficients ** 2
        assert np.allclose(sorted(lams, reverse=True), [0.995, 0.005], atol=1e-12)

    def test_phase_invariance(self):
        # entropy depends only on |overlap|
        base = entropy(two_branch_state(0.9, 1 / np.sqrt(2), 1 / np.sqrt(2)), 1)
        for phase in (1j, np.exp(0.3j), -1):
            psi = two_branch_state(
                0.9 * phase, 1 / np.sqrt(2), 1 / np.sqrt(2)
            )
            assert entropy(psi, 1) == pytest.approx(base, abs=1e-10)

    def test_rejects_unnormalized_amplitudes(self):
        with pytest.raises(ValueError, match="amp"):
            two_branch_state(0.5, 1.0, 1.0)

    def test_overlap_realized(self):
        psi = two_branch_state(0.7 + 0.1j, 0.6, 0.8)
        t = psi.as_tensor()
        a = t[0] / np.linalg.norm(t[0])
        b = t[1] / np.linalg.norm(t[1])
        assert np.vdot(a, b) == pytest.approx(0.7 + 0.1j, abs=1e-12)


class TestDisentanglingUnitary:
    def test_product_state_stays_product(self):
        lay = SpaceLayout([("a", 2), ("b", 3)])
        psi = StateVector(lay, np.kron([1, 0], [0, 1, 0]))
        u = disentangling_unitary(psi, 1)
        assert entropy(apply_unitary(u, psi), 1) <= 1e-10

    def test_bell_state_disentangled(self):
        lay = SpaceLayout([("a", 2), ("b", 2)])
        bell = StateVector(lay, np.array([1, 0, 0, 1]) / np.sqrt(2))
        u = disentangling_unitary(bell, 1)
        assert entropy(apply_unitary(u, bell), 1) <= 1e-9

    def test_random_2x3_disentangled(self):
        rng = np.random.default_rng(2)
        lay = SpaceLayout([("a", 2), ("b", 3)])
        psi = random_state(lay, rng)
        u = disentangling_unitary(psi, 1)
        assert entropy(apply_unitary(u, psi), 1) <= 1e-8

    def test_unitarity(self):
        rng = np.random.default_rng(3)
        lay = SpaceLayout([("a", 4), ("b", 5)])
        psi = random_state(lay, rng)
        u = disentangling_unitary(psi, 1)
        dim = lay.total_dimension
        assert np.linalg.norm(u.conj().T @ u - np.eye(dim)) <= 1e-9

    def test_structure_dependence_pair(self):
        # local unitaries leave entropy alone; the global disentangler
        # does not -- entanglement is a property of the factorization
        rng = np.random.default_rng(4)
        lay = SpaceLayout([("a", 3), ("b", 4)])
        for _ in range(20):
            psi = random_state(lay, rng)
            s0 = entropy(psi, 1)
            ul = np.kron(haar_unitary(3, rng), np.eye(4))
            ur = np.kron(np.eye(3), haar_unitary(4, rng))
            assert abs(entropy(apply_unitary(ul, psi), 1) - s0) <= 1e-9
            assert abs(entropy(apply_unitary(ur, psi), 1) - s0) <= 1e-9
            u = disentangling_unitary(psi, 1)
            s_after = entropy(apply_unitary(u, psi), 1)
            assert s_after <= 1e-8
            if s0 > 1e-6:
                assert abs(s_after - s0) > 1e-7
