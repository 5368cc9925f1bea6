"""Projective measurement: branches, Born weights, collapse, audits.

Branch enumeration is deterministic and exhaustive. Random outcome
sampling is a thin utility over the branch probabilities with a
caller-supplied generator; the physics lives in the branch list.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grids import GridSpec
from .operators import (
    COMMUTATOR_TOL,
    HermitianOperator,
    commutator_norm,
    embed,
    expectation,
)
from .states import SpaceLayout, StateVector

PROJECTOR_TOL = 1e-9
NULL_BRANCH_PROBABILITY = 1e-14
PROBABILITY_SUM_TOL = 1e-12


class ProjectorSet:
    """A complete family of mutually orthogonal projectors.

    Validated on construction: each member idempotent, members mutually
    orthogonal, and the family summing to the identity (Frobenius
    tolerance 1e-9 each). Diagonal projector families validate on their
    diagonals without matrix products.
    """

    def __init__(self, labels, projectors) -> None:
        labels = list(labels)
        projectors = list(projectors)
        if len(labels) != len(projectors):
            raise ValueError("labels and projectors differ in length")
        if len(set(labels)) != len(labels):
            raise ValueError("projector labels must be unique")
        if not projectors:
            raise ValueError("projector set is empty")
        dims = {p.dimension for p in projectors}
        if len(dims) != 1:
            raise ValueError("projectors act on differing dimensions")
        self.labels = tuple(labels)
        self.projectors = tuple(projectors)
        self.dimension = dims.pop()
        self._validate()

    def _validate(self) -> None:
        if all(p.is_diagonal for p in self.projectors):
            total = np.zeros(self.dimension)
            for lbl, p in zip(self.labels, self.projectors):
                d = p.diagonal
                if np.max(np.abs(d * d - d)) > PROJECTOR_TOL:
                    raise ValueError(f"projector {lbl!r} is not idempotent")
                if np.max(np.abs(total * d)) > PROJECTOR_TOL:
                    raise ValueError("projectors are not mutually orthogonal")
                total = total + d
            if np.max(np.abs(total - 1.0)) > PROJECTOR_TOL:
                raise ValueError("projectors do not sum to the identity")
            return
        total = np.zeros((self.dimension, self.dimension), dtype=complex)
        mats = [p.matrix for p in self.projectors]
        for lbl, m in zip(self.labels, mats):
            if np.linalg.norm(m @ m - m) > PROJECTOR_TOL:
                raise ValueError(f"projector {lbl!r} is not idempotent")
        for i in range(len(mats)):
            for j in range(i + 1, len(mats)):
                if np.linalg.norm(mats[i] @ mats[j]) > PROJECTOR_TOL:
                    raise ValueError(
                        f"projectors {self.labels[i]!r} and {self.labels[j]!r} "
                        "are not orthogonal"
                    )
            total += mats[i]
        if np.linalg.norm(total - np.eye(self.dimension)) > PROJECTOR_TOL:
            raise ValueError("projectors do not sum to the identity")


@dataclass(frozen=True)
class Branch:
    """One measurement outcome: label, Born probability, renormalized
    post-collapse state (None for probability below the null threshold)."""

    label: str
    probability: float
    state: StateVector | None


def measure(psi: StateVector, ps: ProjectorSet) -> list[Branch]:
    """Decompose a state into its measurement branches.

    Branch probability is ||P psi||^2 and the branch state P psi / ||P psi||;
    branches below the null-probability threshold carry a null state
    marker instead of dividing by a near-zero norm.
    """
    psi.require_normalized()
    if ps.dimension != psi.layout.total_dimension:
        raise ValueError(
            f"projector dimension {ps.dimension} does not match layout "
            f"dimension {psi.layout.total_dimension}"
        )
    branches = []
    total = 0.0
    for label, p in zip(ps.labels, ps.projectors):
        projected = p.apply(psi.amplitudes)
        prob = float(np.real(np.vdot(projected, projected)))
        total += prob
        if prob < NULL_BRANCH_PROBABILITY:
            branches.append(Branch(label, prob, None))
        else:
            branches.append(
                Branch(label, prob, StateVector(psi.layout, projected / np.sqrt(prob)))
            )
    if abs(total - 1.0) > PROBABILITY_SUM_TOL:
        raise ValueError(f"Born probabilities sum to {total!r}, not 1")
    return branches


def sample_branch(branches: list[Branch], rng: np.random.Generator) -> Branch:
    """Draw one branch according to its Born weight (utility; tests and
    reports rely on the exhaustive branch list, not samples)."""
    probs = np.array([b.probability for b in branches])
    probs = probs / probs.sum()
    return branches[int(rng.choice(len(branches), p=probs))]


def indicator_projectors(
    layout: SpaceLayout, at: str, masks: dict[str, np.ndarray]
) -> ProjectorSet:
    """Diagonal projectors from boolean masks over one factor's basis.

    Masks must partition the factor's basis; completeness is exact by
    construction once the partition is checked.
    """
    dim = layout.factor(at).dimension
    cover = np.zeros(dim, dtype=int)
    for m in masks.values():
        m = np.asarray(m)
        if m.shape != (dim,):
            raise ValueError(f"mask shape {m.shape} does not match factor dim {dim}")
        cover += m.astype(int)
    if not np.all(cover == 1):
        raise ValueError("masks must partition the factor basis exactly")
    pos = layout.index_of(at)
    d_left = int(np.prod(layout.shape[:pos], initial=1))
    d_right = int(np.prod(layout.shape[pos + 1 :], initial=1))
    labels, projectors = [], []
    for label, m in masks.items():
        diag = np.kron(np.kron(np.ones(d_left), m.astype(float)), np.ones(d_right))
        labels.append(label)
        projectors.append(HermitianOperator.from_diagonal(diag))
    return ProjectorSet(labels, projectors)


def window_projector(
    g: GridSpec, x_lo: float, x_hi: float, layout: SpaceLayout, at: str
) -> ProjectorSet:
    """Two-element {inside, outside} indicator set for a grid window."""
    if not x_lo < x_hi:
        raise ValueError(f"empty window: [{x_lo}, {x_hi}]")
    if layout.factor(at).grid != g:
        raise ValueError(f"factor {at!r} does not carry the given grid")
    x = g.coordinates()
    inside = (x >= x_lo) & (x <= x_hi)
    if not inside.any():
        raise ValueError(f"window [{x_lo}, {x_hi}] contains no grid points")
    return indicator_projectors(layout, at, {"inside": inside, "outside": ~inside})


def basis_projectors(layout: SpaceLayout, at: str, labels=None) -> ProjectorSet:
    """One rank-one projector per basis state of the named factor."""
    dim = layout.factor(at).dimension
    if labels is None:
        labels = [f"{at}={i}" for i in range(dim)]
    masks = {}
    for i, label in enumerate(labels):
        m = np.zeros(dim, dtype=bool)
        m[i] = True
        masks[label] = m
    return indicator_projectors(layout, at, masks)


@dataclass(frozen=True)
class ExpectationAudit:
    """Law-of-total-expectation audit for one observable and projector set.

    ``difference`` is the pre-measurement expectation minus the
    Born-weighted branch expectations. It vanishes (to 1e-9) whenever all
    projectors commute with the observable; otherwise the record is
    classified as a non-commuting, *apparent* conservation violation.
    """

    pre_value: float
    born_weighted: float
    difference: float
    projector_commutators: dict[str, float]
    classification: str
    branch_values: dict[str, float] = field(default_factory=dict)

    @property
    def commuting(self) -> bool:
        return self.classification == "commuting"


def total_expectation_audit(
    psi: StateVector, ps: ProjectorSet, q: HermitianOperator
) -> ExpectationAudit:
    """Compare <Q> against the Born-weighted post-measurement average."""
    pre = expectation(q, psi)
    branches = measure(psi, ps)
    weighted = 0.0
    branch_values = {}
    for b in branches:
        if b.state is None:
            continue
        val = expectation(q, b.state)
        branch_values[b.label] = val
        weighted += b.probability * val
    if q.scope is not None:
        q = embed(q, psi.layout, q.scope)
    commutators = {
        label: commutator_norm(q, p)
        for label, p in zip(ps.labels, ps.projectors)
    }
    commuting = all(v <= COMMUTATOR_TOL for v in commutators.values())
    return ExpectationAudit(
        pre_value=pre,
        born_weighted=weighted,
        difference=pre - weighted,
        projector_commutators=commutators,
        classification="commuting" if commuting else "non-commuting projectors",
        branch_values=branch_values,
    )
