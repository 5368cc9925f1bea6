import numpy as np
import pytest

from qconserve import (
    ConservationLedger,
    GridSpec,
    HermitianOperator,
    LedgerEntry,
    SpaceLayout,
    StateVector,
    apply_unitary,
    basis_projectors,
    commutator_norm,
    embed,
    evolve_exact,
    expectation,
    grid_operators,
    measure,
    sigma_x,
    sigma_z,
    tensor,
)
from qconserve.ledger import INTERACTION_BUCKET

TWO_QUBITS = SpaceLayout([("a", 2), ("b", 2)])


def exchange_hamiltonian():
    """Hermitian coupling that swaps |01> and |10>; commutes with total
    sigma_z but not with either local one."""
    m = np.zeros((4, 4), dtype=complex)
    m[1, 2] = m[2, 1] = 1.0
    return HermitianOperator(m)


def total_sz():
    return embed(sigma_z("a"), TWO_QUBITS, "a") + embed(
        sigma_z("b"), TWO_QUBITS, "b"
    )


class TestRegister:
    def test_momentum_conserved_under_free_h(self):
        g = GridSpec(64, 10.0)
        _, mom, kin = grid_operators(g)
        ledger = ConservationLedger()
        entry = ledger.register(LedgerEntry("p", mom), kin)
        assert entry.conserved
        assert entry.commutator_with_h <= 1e-10

    def test_position_not_conserved_under_free_h(self):
        g = GridSpec(64, 10.0)
        pos, _, kin = grid_operators(g)
        ledger = ConservationLedger()
        entry = ledger.register(LedgerEntry("x", pos), kin)
        assert not entry.conserved

    def test_total_sz_conserved_under_exchange(self):
        # explicit commutator oracle: H swaps |01>,|10>, both with total
        # sigma_z eigenvalue 0, so [H, Sz] = 0
        h = exchange_hamiltonian()
        q = total_sz()
        oracle = np.linalg.norm(
            h.matrix @ q.matrix - q.matrix @ h.matrix
        )
        assert oracle <= 1e-12
        ledger = ConservationLedger()
        entry = ledger.register(
            LedgerEntry(
                "total_sz",
                q,
                local_terms=(("a", sigma_z("a")), ("b", sigma_z("b"))),
            ),
            h,
        )
        assert entry.conserved

    def test_local_sz_not_conserved_under_exchange(self):
        h = exchange_hamiltonian()
        ledger = ConservationLedger()
        entry = ledger.register(
            LedgerEntry("sz_a", embed(sigma_z("a"), TWO_QUBITS, "a")), h
        )
        assert not entry.conserved

    def test_duplicate_name_rejected(self):
        ledger = ConservationLedger()
        ledger.register(LedgerEntry("q", sigma_z()), sigma_z())
        with pytest.raises(ValueError, match="duplicate"):
            ledger.register(LedgerEntry("q", sigma_x()), sigma_z())


class TestSnapshot:
    def test_product_state_additivity(self):
        psi = tensor(
            StateVector(SpaceLayout([("a", 2)]), np.array([1, 1]) / np.sqrt(2)),
            StateVector.basis(SpaceLayout([("b", 2)]), 1),
        )
        ledger = ConservationLedger()
        ledger.register(
            LedgerEntry(
                "total_sz",
                total_sz(),
                local_terms=(("a", sigma_z("a")), ("b", sigma_z("b"))),
            ),
            exchange_hamiltonian(),
        )
        ledger.snapshot(0.0, psi)
        row = ledger.report().series["total_sz"][0]
        assert row["global"] == pytest.approx(
            row["factors"]["a"] + row["factors"]["b"], abs=1e-10
        )

    def test_entangled_state_still_additive(self):
        bell = StateVector(TWO_QUBITS, np.array([1, 0, 0, 1]) / np.sqrt(2))
        ledger = ConservationLedger()
        ledger.register(
            LedgerEntry(
                "total_sz",
                total_sz(),
                local_terms=(("a", sigma_z("a")), ("b", sigma_z("b"))),
            ),
            exchange_hamiltonian(),
        )
        ledger.snapshot(0.0, bell)
        row = ledger.report().series["total_sz"][0]
        assert row["global"] == pytest.approx(
            row["factors"]["a"] + row["factors"]["b"], abs=1e-10
        )

    def test_sum_form_violation_rejected(self):
        ledger = ConservationLedger()
        ledger.register(
            LedgerEntry(
                "bad",
                total_sz(),
                local_terms=(("a", sigma_z("a")),),  # missing the b term
            ),
            exchange_hamiltonian(),
        )
        with pytest.raises(ValueError, match="deviate"):
            ledger.snapshot(0.0, StateVector.basis(TWO_QUBITS, 0))

    def test_interaction_bucket(self):
        h = exchange_hamiltonian()
        full = HermitianOperator(total_sz().matrix + 0.25 * h.matrix)
        ledger = ConservationLedger()
        ledger.register(
            LedgerEntry(
                "h_total",
                full,
                local_terms=(
                    ("a", sigma_z("a")),
                    ("b", sigma_z("b")),
                    (INTERACTION_BUCKET, 0.25 * h),
                ),
            ),
            h,
        )
        psi = StateVector(TWO_QUBITS, np.array([0, 1, 1, 0]) / np.sqrt(2))
        ledger.snapshot(0.0, psi)
        row = ledger.report().series["h_total"][0]
        total = sum(row["factors"].values())
        assert row["global"] == pytest.approx(total, abs=1e-10)
        assert row["factors"][INTERACTION_BUCKET] == pytest.approx(0.25)


class TestRecordMeasurement:
    def test_commuting_measurement_preserves_entry(self):
        bell = StateVector(TWO_QUBITS, np.array([1, 0, 0, 1]) / np.sqrt(2))
        ledger = ConservationLedger()
        ledger.register(
            LedgerEntry(
                "total_sz",
                total_sz(),
                local_terms=(("a", sigma_z("a")), ("b", sigma_z("b"))),
            ),
            exchange_hamiltonian(),
        )
        ledger.snapshot(0.0, bell)
        ps = basis_projectors(TWO_QUBITS, "a", ["up", "down"])
        event = ledger.record_measurement(
            measure(bell, ps), bell, t=1.0, projectors=ps
        )
        assert event.classification["total_sz"] == "commuting"
        for audit in event.audits["total_sz"]:
            assert audit.offset_residual <= 1e-9
            # diagonal measurement commutes with total_sz: branch values
            # average back to the baseline
        weighted = sum(
            a.probability * a.global_value for a in event.audits["total_sz"]
        )
        assert weighted == pytest.approx(
            event.baseline_values["total_sz"], abs=1e-10
        )

    def test_exchange_branches_offset(self):
        # evolve |01> halfway through the exchange, then measure qubit a:
        # each branch redistributes sigma_z between the factors with net 0
        h = exchange_hamiltonian()
        psi = evolve_exact(h, StateVector.basis(TWO_QUBITS, 1), np.pi / 4)
        ledger = ConservationLedger()
        ledger.register(
            LedgerEntry(
                "total_sz",
                total_sz(),
                local_terms=(("a", sigma_z("a")), ("b", sigma_z("b"))),
            ),
            h,
        )
        ledger.snapshot(0.0, psi)
        ps = basis_projectors(TWO_QUBITS, "a", ["up", "down"])
        event = ledger.record_measurement(
            measure(psi, ps), psi, t=1.0, projectors=ps
        )
        for audit in event.audits["total_sz"]:
            assert audit.offset_residual <= 1e-9
            assert abs(audit.deviation_from_preinteraction) <= 1e-9

    def test_bookkeeping_identity_unconditional(self):
        # the per-factor deltas of a sum-form observable add to the global
        # delta even for projectors that do not commute with it
        rng = np.random.default_rng(7)
        lay = SpaceLayout([("a", 2), ("b", 3)])
        sz3 = HermitianOperator.from_diagonal([1.0, 0.0, -1.0], scope="b")
        obs = embed(sigma_z("a"), lay, "a") + embed(sz3, lay, "b")
        amps = rng.normal(size=6) + 1j * rng.normal(size=6)
        psi = StateVector(lay, amps / np.linalg.norm(amps))
        ledger = ConservationLedger()
        ledger.register(
            LedgerEntry(
                "q", obs, local_terms=(("a", sigma_z("a")), ("b", sz3))
            ),
            obs,
        )
        ledger.snapshot(0.0, psi)
        # measure in a basis that does not commute with the observable
        plus_minus = basis_projectors(lay, "a", ["p", "m"])
        u = np.kron(
            np.array([[1, 1], [1, -1]]) / np.sqrt(2), np.eye(3)
        )
        rotated = apply_unitary(u, psi)
        event = ledger.record_measurement(
            measure(rotated, plus_minus), rotated, t=1.0
        )
        for audit in event.audits["q"]:
            if audit.global_value is not None:
                assert audit.offset_residual <= 1e-9

    def test_layout_mismatch_rejected(self):
        ledger = ConservationLedger()
        ledger.register(LedgerEntry("q", total_sz()), exchange_hamiltonian())
        bell = StateVector(TWO_QUBITS, np.array([1, 0, 0, 1]) / np.sqrt(2))
        other = StateVector.basis(SpaceLayout([("x", 2), ("y", 2)]), 0)
        branches = measure(bell, basis_projectors(TWO_QUBITS, "a"))
        with pytest.raises(ValueError, match="layout"):
            ledger.record_measurement(
                [b._replace() if hasattr(b, "_replace") else b for b in branches],
                other,
            )


class TestReport:
    def test_single_snapshot_zero_drift(self):
        ledger = ConservationLedger()
        ledger.register(LedgerEntry("sz", sigma_z()), sigma_z())
        ledger.snapshot(0.0, StateVector.basis(SpaceLayout([("s", 2)]), 0))
        assert ledger.report().max_unitary_drift == 0.0

    def test_conserved_entry_drift_small(self):
        g = GridSpec(128, 20.0)
        _, mom, kin = grid_operators(g)
        x = g.coordinates()
        amps = np.exp(-(x**2) / 4).astype(complex)
        psi = StateVector(
            SpaceLayout([("x", 128, g)]), amps / np.linalg.norm(amps)
        )
        ledger = ConservationLedger()
        ledger.register(LedgerEntry("p", mom), kin)
        from qconserve import evolve_split_step

        ledger.snapshot(0.0, psi)
        for t in (0.5, 1.0):
            psi = evolve_split_step(g, 1.0, np.zeros(128), psi, 0.5, 32)
            ledger.snapshot(t, psi)
        assert ledger.report().max_unitary_drift <= 1e-9

    def test_nonconserved_excluded_from_drift(self):
        # sigma_x drifts under sigma_z evolution but is tagged out
        ledger = ConservationLedger()
        ledger.register(LedgerEntry("sx", sigma_x()), sigma_z())
        ledger.register(LedgerEntry("sz", sigma_z()), sigma_z())
        lay = SpaceLayout([("s", 2)])
        psi = StateVector(lay, np.array([1, 1]) / np.sqrt(2))
        ledger.snapshot(0.0, psi)
        moved = evolve_exact(sigma_z(), psi, 0.7)
        ledger.snapshot(0.7, moved)
        rep = ledger.report()
        assert rep.max_unitary_drift <= 1e-12
        assert rep.drift_of("sx") > 0.1

    def test_empty_ledger_rejected(self):
        with pytest.raises(ValueError, match="snapshot"):
            ConservationLedger().report()

    def test_probabilities_recorded(self):
        bell = StateVector(TWO_QUBITS, np.array([1, 0, 0, 1]) / np.sqrt(2))
        ledger = ConservationLedger()
        ledger.register(LedgerEntry("q", total_sz()), exchange_hamiltonian())
        ledger.snapshot(0.0, bell)
        ps = basis_projectors(TWO_QUBITS, "a")
        ledger.record_measurement(measure(bell, ps), bell)
        ev = ledger.report().events[0]
        assert sum(ev.probabilities.values()) == pytest.approx(1.0, abs=1e-12)
