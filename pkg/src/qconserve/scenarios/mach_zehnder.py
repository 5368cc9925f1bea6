"""Beam-splitter back-action in a Mach-Zehnder arm.

The beam-splitter is one collective momentum mode prepared in a broad
Gaussian (spread sigma_p); reflecting the photon hands it a momentum kick
-delta_p. Because sigma_p >> delta_p the two conditional beam-splitter
states overlap almost completely, which is exactly why the entanglement is
so easy to overlook -- and why detecting the photon in the reflected branch
collapses the apparatus onto the kicked pointer with the books balanced.

The apparatus mode is discretized as a momentum ladder with spacing equal
to the kick, wide enough (8 sigma_p) that truncation stays far below every
reported tolerance. The beam-splitter unitary is built as a direct sum of
SU(2) rotations inside eigenspaces of the total momentum, so it commutes
with the total *exactly*, kick included.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..dynamics import apply_unitary, hermitian_generator
from ..entanglement import entropy, epsilon_entropy_approx
from ..ledger import ConservationLedger, LedgerEntry
from ..measurement import indicator_projectors, measure
from ..operators import HermitianOperator, expectation
from ..states import SpaceLayout, StateVector

#: Ladder half-width in units of sigma_p. At 8 sigma the truncated tail
#: amplitude is ~1e-7, keeping branch-total and fidelity errors below 1e-10.
LADDER_SIGMA_SPAN = 8.0


@dataclass(frozen=True)
class MachZehnderSpec:
    """Momentum kick, apparatus momentum spread, and branch amplitudes."""

    kick: float = 1.0
    apparatus_sigma_p: float = 100.0
    branch_amplitudes: tuple[complex, complex] = (
        1.0 / math.sqrt(2.0),
        1.0 / math.sqrt(2.0),
    )

    def __post_init__(self) -> None:
        if not (self.apparatus_sigma_p > 0 and np.isfinite(self.apparatus_sigma_p)):
            raise ValueError("apparatus_sigma_p must be positive and finite")
        if not (self.kick >= 0 and np.isfinite(self.kick)):
            raise ValueError("kick must be non-negative and finite")
        amp_r, amp_t = self.branch_amplitudes
        total = abs(amp_r) ** 2 + abs(amp_t) ** 2
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"branch amplitudes are not normalized: {total!r}")


def _beam_splitter_unitary(
    amp_r: complex, amp_t: complex, n_ladder: int, shift: int
) -> tuple[np.ndarray, np.ndarray]:
    """The photon-apparatus rotation and its Hermitian generator.

    Photon basis order is (r, t); ladder index j holds momentum p_min+j*kick.
    The unitary rotates each pair {(t, j), (r, j-shift)} -- both members
    carry the same total momentum -- and leaves the unpaired edge states
    alone, so [U, P_total] = 0 identically.
    """
    dim = 2 * n_ladder
    u = np.eye(dim, dtype=complex)
    h = np.zeros((dim, dim), dtype=complex)
    block = np.array(
        [[amp_t, -np.conj(amp_r)], [amp_r, np.conj(amp_t)]], dtype=complex
    )
    gen = hermitian_generator(block).matrix
    j = np.arange(shift, n_ladder)
    a = n_ladder + j  # (t, j)
    b = j - shift  # (r, j-shift)
    u[a, a] = block[0, 0]
    u[b, a] = block[1, 0]
    u[a, b] = block[0, 1]
    u[b, b] = block[1, 1]
    h[a, a] = gen[0, 0]
    h[b, a] = gen[1, 0]
    h[a, b] = gen[0, 1]
    h[b, b] = gen[1, 1]
    return u, h


def run_mach_zehnder(spec: MachZehnderSpec) -> dict:
    """Run the beam-splitter interaction, detection, and momentum audit."""
    kick = spec.kick
    sigma = spec.apparatus_sigma_p
    amp_r, amp_t = (complex(a) for a in spec.branch_amplitudes)

    if kick > 0:
        shift = 1
        half = int(math.ceil(LADDER_SIGMA_SPAN * sigma / kick))
        spacing = kick
    else:
        # no back-action: the same-slot pair rotation leaves the pointer alone
        shift = 0
        half = 8
        spacing = sigma
    j = np.arange(-(half + 1), half + 1)
    momenta = j * spacing
    n_ladder = j.size
    layout = SpaceLayout([("photon", 2), ("apparatus", n_ladder)])

    pointer0 = np.exp(-(momenta**2) / (4.0 * sigma**2))
    pointer0 /= np.linalg.norm(pointer0)
    # photon enters in the transmitted (straight-through) port state |t>
    psi0 = StateVector(layout, np.kron([0.0, 1.0], pointer0))

    photon_p = HermitianOperator.from_diagonal([kick, 0.0], scope="photon")
    apparatus_p = HermitianOperator.from_diagonal(momenta, scope="apparatus")
    total_p = HermitianOperator.from_diagonal(
        np.kron([kick, 0.0], np.ones(n_ladder)) + np.kron(np.ones(2), momenta)
    )

    u, h_int = _beam_splitter_unitary(amp_r, amp_t, n_ladder, shift)
    h_op = HermitianOperator(h_int)

    ledger = ConservationLedger()
    ledger.register(
        LedgerEntry(
            name="total_momentum",
            observable=total_p,
            local_terms=(("photon", photon_p), ("apparatus", apparatus_p)),
        ),
        h_op,
    )
    ledger.snapshot(0.0, psi0)
    pre_total = expectation(total_p, psi0)

    psi1 = apply_unitary(u, psi0)
    ledger.snapshot(1.0, psi1)

    # back-action diagnostics
    if shift > 0:
        kicked = np.zeros_like(pointer0)
        kicked[:-shift] = pointer0[shift:]
        kicked /= np.linalg.norm(kicked)
    else:
        kicked = pointer0.copy()
    overlap = float(np.dot(pointer0, kicked))
    epsilon = max(0.0, 1.0 - overlap)
    overlap_formula = float(np.exp(-(kick**2) / (8.0 * sigma**2)))
    visibility = 2.0 * abs(amp_r) * abs(amp_t) * overlap
    ent_exact = entropy(psi1, cut=1)
    ent_approx = epsilon_entropy_approx(epsilon) if epsilon > 0 else 0.0

    # photon-path detection collapses the apparatus branch-wise
    ps = indicator_projectors(
        layout,
        "photon",
        {
            "reflected": np.array([True, False]),
            "transmitted": np.array([False, True]),
        },
    )
    branches = measure(psi1, ps)
    event = ledger.record_measurement(branches, psi1, t=1.0, projectors=ps)

    branch_rows = []
    fidelity = None
    for b in branches:
        row = {"label": b.label, "probability": b.probability}
        if b.state is not None:
            total = expectation(total_p, b.state)
            row["total_momentum"] = total
            row["deviation_from_preinteraction"] = total - pre_total
            if b.label == "reflected":
                collapsed = b.state.as_tensor()[0, :]
                fidelity = float(abs(np.vdot(kicked, collapsed)) ** 2)
                row["apparatus_fidelity_with_shifted_pointer"] = fidelity
        branch_rows.append(row)

    return {
        "spec": {
            "kick": kick,
            "apparatus_sigma_p": sigma,
            "branch_amplitudes": [amp_r, amp_t],
            "ladder_size": n_ladder,
        },
        "overlap": overlap,
        "overlap_gaussian_formula": overlap_formula,
        "epsilon": epsilon,
        "epsilon_formula": 1.0 - overlap_formula,
        "entropy_exact_nats": ent_exact,
        "entropy_approx_nats": ent_approx,
        "entropy_relative_error": (
            (ent_approx - ent_exact) / ent_exact if ent_exact > 0 else 0.0
        ),
        "visibility": visibility,
        "pre_interaction_total_momentum": pre_total,
        "collapsed_fidelity": fidelity,
        "branches": branch_rows,
        "event_classification": event.classification.get("total_momentum"),
        "ledger": ledger.report(),
    }
