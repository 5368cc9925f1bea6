"""Entanglement entropy, the overlap-deficit closed forms, and the
disentangling global unitary.

All entropies are in nats. For two equally weighted branches whose
apparatus pointer states have inner-product magnitude 1 - eps, the reduced
spectrum is (1 +/- (1 - eps))/2 and the small-eps entropy is approximated
by (eps/2) * (1 - ln(eps/2)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .states import (
    SCHMIDT_RANK_CUTOFF,
    SpaceLayout,
    StateVector,
    schmidt,
)


def entropy(psi: StateVector, cut: int) -> float:
    """Entanglement entropy in nats across the given bipartition cut.

    S = -sum_i lambda_i ln lambda_i over the reduced-density eigenvalues,
    with 0 ln 0 := 0. Zero (to 1e-10) exactly for Schmidt rank one.
    """
    return schmidt(psi, cut).entropy()


def epsilon_entropy_approx(epsilon: float) -> float:
    """Small-overlap-deficit entropy approximation (eps/2)(1 - ln(eps/2)).

    Defined as the limit 0 at eps = 0. For eps <= 0.01 this tracks the
    exact two-branch entropy within 0.1% relative error; the agreement
    degrades monotonically as eps grows.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    if epsilon == 0.0:
        return 0.0
    half = 0.5 * epsilon
    return float(half * (1.0 - np.log(half)))


def two_branch_entropy_exact(epsilon: float) -> float:
    """Exact entropy of the equal-amplitude two-branch state with pointer
    overlap 1 - eps, from the closed-form spectrum (1 +/- (1 - eps))/2."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    lam = np.array([(2.0 - epsilon) / 2.0, epsilon / 2.0])
    lam = lam[lam > 0.0]
    return float(-np.sum(lam * np.log(lam)))


@dataclass(frozen=True)
class EntropyReport:
    """Exact vs approximate entropy for one overlap deficit."""

    epsilon: float
    exact_nats: float
    approx_nats: float

    @property
    def relative_error(self) -> float:
        if self.exact_nats == 0.0:
            return 0.0
        return (self.approx_nats - self.exact_nats) / self.exact_nats


def entropy_report(epsilon: float) -> EntropyReport:
    return EntropyReport(
        epsilon=epsilon,
        exact_nats=two_branch_entropy_exact(epsilon),
        approx_nats=epsilon_entropy_approx(epsilon),
    )


def two_branch_state(
    overlap: complex,
    amp_r: complex,
    amp_t: complex,
    labels: tuple[str, str] = ("path", "apparatus"),
) -> StateVector:
    """amp_r |r>|A> + amp_t |t>|B> with <A|B> = overlap.

    The apparatus states are realized in a two-dimensional effective basis
    (|A> = |0>, |B> = g|0> + sqrt(1-|g|^2)|1>); entanglement across the
    cut depends only on their Gram matrix, so this minimal model is
    faithful. For equal amplitudes the Schmidt eigenvalues are
    (1 +/- |overlap|)/2.
    """
    g = complex(overlap)
    if abs(g) > 1.0 + 1e-12:
        raise ValueError(f"|overlap| must be <= 1, got {abs(g)}")
    total = abs(amp_r) ** 2 + abs(amp_t) ** 2
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"|amp_r|^2 + |amp_t|^2 = {total!r}, expected 1")
    layout = SpaceLayout([(labels[0], 2), (labels[1], 2)])
    a_state = np.array([1.0, 0.0], dtype=complex)
    b_state = np.array([g, np.sqrt(max(0.0, 1.0 - abs(g) ** 2))], dtype=complex)
    amps = amp_r * np.kron([1, 0], a_state) + amp_t * np.kron([0, 1], b_state)
    return StateVector(layout, amps)


def disentangling_unitary(psi: StateVector, cut: int) -> np.ndarray:
    """A global unitary U making U psi a product state across the cut.

    Built from the Schmidt bases: rotate into the Schmidt product basis,
    then permute index pairs (i, j) -> ((i - j) mod d_left, j), which sends
    every diagonal pair (i, i) to (0, i). The image has amplitudes c_i at
    |0>|i>, i.e. |0> (x) sum_i c_i |i>. Among the infinitely many valid
    unitaries this Schmidt-aligned one is the deterministic choice.
    """
    psi.require_normalized()
    nfac = len(psi.layout.factors)
    if not (0 < cut < nfac):
        raise ValueError(f"cut {cut} leaves an empty side (factors={nfac})")
    shape = psi.layout.shape
    d_left = int(np.prod(shape[:cut]))
    d_right = int(np.prod(shape[cut:]))
    m = psi.amplitudes.reshape(d_left, d_right)
    u_full, _, vh_full = np.linalg.svd(m, full_matrices=True)
    # Coordinates in the Schmidt product basis: (U^dag M conj(Vh^dag))_ij = s_i delta_ij.
    basis_change = np.kron(u_full.conj().T, vh_full.conj())
    rows = np.arange(d_left * d_right)
    i, j = divmod(rows, d_right)
    target = ((i - j) % d_left) * d_right + j
    perm = np.zeros((d_left * d_right, d_left * d_right), dtype=complex)
    perm[target, rows] = 1.0
    return perm @ basis_change
