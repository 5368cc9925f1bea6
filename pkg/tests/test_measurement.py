import numpy as np
import pytest
import scipy.special

from qconserve import (
    GridSpec,
    HermitianOperator,
    ProjectorSet,
    SpaceLayout,
    StateVector,
    basis_projectors,
    indicator_projectors,
    measure,
    sample_branch,
    sigma_z,
    total_expectation_audit,
    window_projector,
)

QUBIT = SpaceLayout([("s", 2)])
TWO_SPINS = SpaceLayout([("s1", 2), ("s2", 2)])


def haar_unitary(dim, rng):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state(layout, rng):
    amps = rng.normal(size=layout.total_dimension) + 1j * rng.normal(
        size=layout.total_dimension
    )
    return StateVector(layout, amps / np.linalg.norm(amps))


def rank_projectors(dim, groups, rng):
    """Random orthonormal-basis projector set partitioned into groups."""
    v = haar_unitary(dim, rng)
    labels, projectors = [], []
    start = 0
    for i, size in enumerate(groups):
        cols = v[:, start : start + size]
        projectors.append(HermitianOperator(cols @ cols.conj().T))
        labels.append(f"g{i}")
        start += size
    return ProjectorSet(labels, projectors)


def singlet():
    return StateVector(TWO_SPINS, np.array([0, 1, -1, 0]) / np.sqrt(2))


class TestProjectorSet:
    def test_rejects_incomplete(self):
        p0 = HermitianOperator.from_diagonal([1.0, 0.0])
        with pytest.raises(ValueError, match="identity"):
            ProjectorSet(["a"], [p0])

    def test_rejects_non_idempotent(self):
        with pytest.raises(ValueError, match="idempotent"):
            ProjectorSet(["a"], [HermitianOperator.from_diagonal([0.5, 0.5])])

    def test_rejects_overlapping(self):
        p = HermitianOperator.from_diagonal([1.0, 0.0])
        q = HermitianOperator.from_diagonal([1.0, 1.0])
        with pytest.raises(ValueError, match="orthogonal"):
            ProjectorSet(["a", "b"], [p, q])

    def test_dense_validation(self):
        rng = np.random.default_rng(0)
        ps = rank_projectors(6, (2, 3, 1), rng)
        assert len(ps.projectors) == 3

    def test_dense_rejects_bad_sum(self):
        rng = np.random.default_rng(1)
        v = haar_unitary(4, rng)
        cols = v[:, :2]
        p = HermitianOperator(cols @ cols.conj().T)
        with pytest.raises(ValueError, match="identity"):
            ProjectorSet(["a"], [p])


class TestMeasure:
    def test_eigenstate_certain(self):
        psi = StateVector.basis(QUBIT, 0)
        branches = measure(psi, basis_projectors(QUBIT, "s", ["up", "down"]))
        probs = {b.label: b.probability for b in branches}
        assert probs["up"] == pytest.approx(1.0, abs=1e-12)
        assert branches[1].state is None

    def test_plus_state_even_split(self):
        psi = StateVector(QUBIT, np.array([1, 1]) / np.sqrt(2))
        branches = measure(psi, basis_projectors(QUBIT, "s", ["up", "down"]))
        for b in branches:
            assert b.probability == pytest.approx(0.5, abs=1e-12)
            assert b.state.is_normalized()

    def test_singlet_anticorrelated_same_axis(self):
        # joint z-basis outcomes: ud and du each 0.5, uu and dd zero
        psi = singlet()
        ps1 = basis_projectors(TWO_SPINS, "s1", ["u", "d"])
        ps2 = basis_projectors(TWO_SPINS, "s2", ["u", "d"])
        joint = {}
        for b1 in measure(psi, ps1):
            if b1.state is None:
                joint[(b1.label, "u")] = 0.0
                joint[(b1.label, "d")] = 0.0
                continue
            for b2 in measure(b1.state, ps2):
                joint[(b1.label, b2.label)] = b1.probability * b2.probability
        assert joint[("u", "d")] == pytest.approx(0.5, abs=1e-12)
        assert joint[("d", "u")] == pytest.approx(0.5, abs=1e-12)
        assert joint[("u", "u")] == pytest.approx(0.0, abs=1e-12)
        assert joint[("d", "d")] == pytest.approx(0.0, abs=1e-12)

    def test_singlet_anticorrelated_rotated_axis(self):
        # the singlet is rotation-invariant: same-axis anticorrelation
        # holds along x as well
        psi = singlet()
        plus = np.array([1, 1]) / np.sqrt(2)
        minus = np.array([1, -1]) / np.sqrt(2)
        for lbl, vec in (("x", plus), ("-x", minus)):
            pr1 = np.kron(np.outer(vec, vec), np.eye(2))
            pr2 = np.kron(np.eye(2), np.outer(vec, vec))
            p_same = float(
                np.vdot(pr2 @ (pr1 @ psi.amplitudes), pr1 @ psi.amplitudes).real
            )
            assert p_same == pytest.approx(0.0, abs=1e-12)

    def test_probabilities_sum_to_one(self):
        rng = np.random.default_rng(2)
        for _ in range(40):
            dim = int(rng.integers(2, 32))
            lay = SpaceLayout([("s", dim)])
            psi = random_state(lay, rng)
            groups = []
            left = dim
            while left:
                size = int(rng.integers(1, left + 1))
                groups.append(size)
                left -= size
            branches = measure(psi, rank_projectors(dim, groups, rng))
            assert sum(b.probability for b in branches) == pytest.approx(
                1.0, abs=1e-12
            )

    def test_repeatability(self):
        rng = np.random.default_rng(3)
        lay = SpaceLayout([("s", 8)])
        psi = random_state(lay, rng)
        ps = rank_projectors(8, (3, 2, 3), rng)
        for b in measure(psi, ps):
            if b.state is None:
                continue
            again = {x.label: x.probability for x in measure(b.state, ps)}
            assert again[b.label] == pytest.approx(1.0, abs=1e-10)

    def test_null_branch_marker(self):
        psi = StateVector.basis(QUBIT, 0)
        ps = basis_projectors(QUBIT, "s")
        null = measure(psi, ps)[1]
        assert null.probability < 1e-14
        assert null.state is None

    def test_sampling_is_deterministic_given_seed(self):
        psi = StateVector(QUBIT, np.array([1, 1]) / np.sqrt(2))
        branches = measure(psi, basis_projectors(QUBIT, "s"))
        a = sample_branch(branches, np.random.default_rng(42)).label
        b = sample_branch(branches, np.random.default_rng(42)).label
        assert a == b


class TestWindowProjector:
    def grid_state(self, g, a=1.0):
        x = g.coordinates()
        amps = np.exp(-(x**2) / (4 * a**2)).astype(complex)
        return StateVector(
            SpaceLayout([("x", g.points, g)]), amps / np.linalg.norm(amps)
        )

    def test_full_range_window(self):
        g = GridSpec(128, 20.0)
        psi = self.grid_state(g)
        ps = window_projector(g, -10.0, 10.0, psi.layout, "x")
        inside = measure(psi, ps)[0]
        assert inside.probability == pytest.approx(1.0, abs=1e-12)

    def test_disjoint_support(self):
        g = GridSpec(256, 40.0)
        psi = self.grid_state(g, a=0.5)
        ps = window_projector(g, 15.0, 18.0, psi.layout, "x")
        inside = next(b for b in measure(psi, ps) if b.label == "inside")
        assert inside.probability < 1e-10

    def test_gaussian_one_sigma_window_erf_oracle(self):
        # quadrature oracle: integral of |psi|^2 over [-1, 1] equals
        # erf(1/sqrt(2)) up to the grid's window-edge rounding
        g = GridSpec(4096, 200.0)
        psi = self.grid_state(g, a=1.0)
        ps = window_projector(g, -1.0, 1.0, psi.layout, "x")
        inside = next(b for b in measure(psi, ps) if b.label == "inside")
        x = g.coordinates()
        mask = (x >= -1.0) & (x <= 1.0)
        oracle = float(np.sum(np.abs(psi.amplitudes[mask]) ** 2))
        assert inside.probability == pytest.approx(oracle, abs=1e-15)
        erf = float(scipy.special.erf(1 / np.sqrt(2)))
        assert inside.probability == pytest.approx(erf, rel=2e-3)

    def test_empty_window_rejected(self):
        g = GridSpec(64, 10.0)
        lay = SpaceLayout([("x", 64, g)])
        with pytest.raises(ValueError, match="window"):
            window_projector(g, 3.0, 3.0, lay, "x")

    def test_window_outside_grid_points(self):
        g = GridSpec(64, 10.0)
        lay = SpaceLayout([("x", 64, g)])
        with pytest.raises(ValueError, match="no grid points"):
            window_projector(g, 4.99, 4.995, lay, "x")


class TestIndicatorProjectors:
    def test_masks_must_partition(self):
        lay = SpaceLayout([("a", 3)])
        with pytest.raises(ValueError, match="partition"):
            indicator_projectors(
                lay, "a", {"x": np.array([1, 1, 0]), "y": np.array([0, 1, 1])}
            )

    def test_embedded_factor_projection(self):
        lay = SpaceLayout([("a", 2), ("b", 2)])
        bell = StateVector(lay, np.array([1, 0, 0, 1]) / np.sqrt(2))
        ps = indicator_projectors(
            lay, "b", {"lo": np.array([True, False]), "hi": np.array([False, True])}
        )
        branches = measure(bell, ps)
        for b in branches:
            assert b.probability == pytest.approx(0.5, abs=1e-12)


class TestAudit:
    def test_identity_observable_zero_difference(self):
        rng = np.random.default_rng(4)
        lay = SpaceLayout([("s", 6)])
        psi = random_state(lay, rng)
        ps = rank_projectors(6, (2, 4), rng)
        ident = HermitianOperator.from_diagonal(np.ones(6))
        audit = total_expectation_audit(psi, ps, ident)
        assert audit.difference == pytest.approx(0.0, abs=1e-12)
        assert audit.commuting

    def test_diagonal_observable_in_measurement_basis(self):
        rng = np.random.default_rng(5)
        lay = SpaceLayout([("s", 4)])
        psi = random_state(lay, rng)
        ps = basis_projectors(lay, "s")
        q = HermitianOperator.from_diagonal([0.3, -1.0, 2.0, 0.1])
        audit = total_expectation_audit(psi, ps, q)
        assert abs(audit.difference) <= 1e-12
        assert audit.classification == "commuting"

    def test_noncommuting_window_momentum_flagged(self):
        g = GridSpec(512, 100.0)
        x = g.coordinates()
        amps = (np.exp(-(x**2) / 16) * np.exp(0.5j * x)).astype(complex)
        psi = StateVector(
            SpaceLayout([("x", 512, g)]), amps / np.linalg.norm(amps)
        )
        from qconserve import grid_operators

        _, mom, _ = grid_operators(g)
        ps = window_projector(g, -2.0, 6.0, psi.layout, "x")
        audit = total_expectation_audit(psi, ps, mom)
        assert audit.classification == "non-commuting projectors"
        assert abs(audit.difference) > 1e-6

    def test_commuting_audit_randomized(self):
        # commuting (state, observable, projector-set) triples satisfy the
        # law of total expectation to 1e-9
        rng = np.random.default_rng(6)
        for _ in range(60):
            dim = int(rng.integers(2, 24))
            v = haar_unitary(dim, rng)
            q = HermitianOperator(v @ np.diag(rng.normal(size=dim)) @ v.conj().T)
            groups = []
            left = dim
            while left:
                size = int(rng.integers(1, left + 1))
                groups.append(size)
                left -= size
            labels, projectors = [], []
            start = 0
            for i, size in enumerate(groups):
                cols = v[:, start : start + size]
                projectors.append(HermitianOperator(cols @ cols.conj().T))
                labels.append(f"g{i}")
                start += size
            ps = ProjectorSet(labels, projectors)
            psi = random_state(SpaceLayout([("s", dim)]), rng)
            audit = total_expectation_audit(psi, ps, q)
            assert abs(audit.difference) <= 1e-9
