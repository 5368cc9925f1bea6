"""Conservation bookkeeping across evolution and measurement events.

A ledger is an observer: it registers observables against a Hamiltonian,
snapshots global and per-factor expectations along the run, and audits
measurement events branch by branch. It never mutates states. The branch
bookkeeping identity -- the per-factor deltas of a sum-form observable add
up to its global delta -- is linear algebra and is checked unconditionally;
whether a branch *total* matches the pre-interaction value is the physics
being audited.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .measurement import Branch, ProjectorSet
from .operators import (
    COMMUTATOR_TOL,
    HermitianOperator,
    commutator_norm,
    embed,
    expectation,
)
from .states import StateVector

SUM_FORM_TOL = 1e-9
OFFSET_RESIDUAL_TOL = 1e-9

#: Special local-term label for cross terms that cannot be attributed to a
#: single factor (e.g. interaction energy); the operator is used full-scope.
INTERACTION_BUCKET = "interaction"


@dataclass(frozen=True)
class LedgerEntry:
    """An observable registered for tracking.

    ``local_terms`` optionally decomposes the observable into per-factor
    pieces (plus at most one full-scope ``interaction`` bucket); their
    embedded sum must reproduce the observable to 1e-9 in Frobenius norm,
    which is what licenses per-factor attribution.
    """

    name: str
    observable: HermitianOperator
    local_terms: tuple[tuple[str, HermitianOperator], ...] | None = None
    commutator_with_h: float = 0.0

    @property
    def conserved(self) -> bool:
        return self.commutator_with_h <= COMMUTATOR_TOL


@dataclass(frozen=True)
class BranchAudit:
    """Per-branch bookkeeping for one entry at one measurement event."""

    branch_label: str
    probability: float
    global_value: float | None
    factor_values: dict[str, float]
    factor_deltas: dict[str, float]
    offset_residual: float | None
    deviation_from_preinteraction: float | None


@dataclass(frozen=True)
class MeasurementEvent:
    t: float
    baseline_values: dict[str, float]
    audits: dict[str, list[BranchAudit]]
    probabilities: dict[str, float]
    classification: dict[str, str]


@dataclass(frozen=True)
class ConservationReport:
    """Frozen view of a ledger: series, events, and the headline drift."""

    entry_names: tuple[str, ...]
    conserved_tags: dict[str, bool]
    commutators: dict[str, float]
    series: dict[str, list[dict]]
    events: list[MeasurementEvent]
    max_unitary_drift: float
    branch_offset_residuals: list[float]

    def drift_of(self, name: str) -> float:
        rows = self.series[name]
        first = rows[0]["global"]
        return max(abs(r["global"] - first) for r in rows)


class ConservationLedger:
    """Single-writer accumulator of snapshots and measurement events."""

    def __init__(self) -> None:
        self._entries: dict[str, LedgerEntry] = {}
        self._embedded: dict[str, tuple] = {}  # name -> (layout, [(label, op)])
        self._series: dict[str, list[dict]] = {}
        self._events: list[MeasurementEvent] = []
        self._first_values: dict[str, float] = {}

    @property
    def entries(self) -> dict[str, LedgerEntry]:
        return dict(self._entries)

    def register(
        self, entry: LedgerEntry, h: HermitianOperator
    ) -> LedgerEntry:
        """Store an entry with its commutator against the Hamiltonian.

        Entries whose commutator exceeds the tolerance are tagged not
        conserved under this Hamiltonian but are tracked all the same.
        Returns the stored entry (with ``commutator_with_h`` filled in).
        """
        if entry.name in self._entries:
            raise ValueError(f"duplicate ledger entry name {entry.name!r}")
        comm = commutator_norm(h, entry.observable)
        stored = LedgerEntry(
            name=entry.name,
            observable=entry.observable,
            local_terms=entry.local_terms,
            commutator_with_h=comm,
        )
        self._entries[entry.name] = stored
        self._series[entry.name] = []
        return stored

    def _factor_operators(
        self, name: str, psi: StateVector
    ) -> list[tuple[str, HermitianOperator]]:
        """Embedded per-factor operators, validated sum-form once per layout."""
        entry = self._entries[name]
        if entry.local_terms is None:
            return []
        cached = self._embedded.get(name)
        if cached is not None and cached[0] == psi.layout:
            return cached[1]
        embedded = []
        for label, op in entry.local_terms:
            if label == INTERACTION_BUCKET:
                embedded.append((label, op))
            else:
                embedded.append((label, embed(op, psi.layout, label)))
        ops = [op for _, op in embedded]
        if entry.observable.is_diagonal and all(op.is_diagonal for op in ops):
            total = np.sum([op.diagonal for op in ops], axis=0)
            dev = float(np.linalg.norm(total - entry.observable.diagonal))
        else:
            total = ops[0].matrix.copy()
            for op in ops[1:]:
                total = total + op.matrix
            dev = float(np.linalg.norm(total - entry.observable.matrix))
        if dev > SUM_FORM_TOL:
            raise ValueError(
                f"entry {name!r}: embedded local terms deviate from the "
                f"observable by {dev:.3e}"
            )
        self._embedded[name] = (psi.layout, embedded)
        return embedded

    def snapshot(self, t: float, psi: StateVector) -> None:
        """Append (t, global, per-factor) values for every entry."""
        psi.require_normalized()
        for name, entry in self._entries.items():
            row = {"t": float(t), "global": expectation(entry.observable, psi)}
            factors = {}
            for label, op in self._factor_operators(name, psi):
                factors[label] = expectation(op, psi)
            row["factors"] = factors
            self._series[name].append(row)
            if name not in self._first_values:
                self._first_values[name] = row["global"]

    def record_measurement(
        self,
        branches: list[Branch],
        baseline: StateVector,
        t: float = 0.0,
        projectors: ProjectorSet | None = None,
    ) -> MeasurementEvent:
        """Audit a measurement event against its pre-measurement baseline.

        For each branch and sum-form entry: per-factor deltas, the
        bookkeeping residual |sum of factor deltas - global delta|, and the
        branch's deviation from the entry's pre-interaction value (the
        first snapshot, falling back to the baseline). When the projector
        set is supplied, each entry is classified by whether all projectors
        commute with its observable.
        """
        baseline.require_normalized()
        total_p = sum(b.probability for b in branches)
        if abs(total_p - 1.0) > 1e-12:
            raise ValueError(f"branch probabilities sum to {total_p!r}")
        baseline_values = {}
        audits: dict[str, list[BranchAudit]] = {}
        classification: dict[str, str] = {}
        for name, entry in self._entries.items():
            base_global = expectation(entry.observable, baseline)
            baseline_values[name] = base_global
            factor_ops = self._factor_operators(name, baseline)
            base_factors = {lbl: expectation(op, baseline) for lbl, op in factor_ops}
            pre_interaction = self._first_values.get(name, base_global)
            rows = []
            for b in branches:
                if b.state is None:
                    rows.append(
                        BranchAudit(b.label, b.probability, None, {}, {}, None, None)
                    )
                    continue
                if b.state.layout != baseline.layout:
                    raise ValueError("branch layout does not match baseline layout")
                g = expectation(entry.observable, b.state)
                fv = {lbl: expectation(op, b.state) for lbl, op in factor_ops}
                deltas = {lbl: fv[lbl] - base_factors[lbl] for lbl in fv}
                residual = None
                if factor_ops:
                    residual = abs(sum(deltas.values()) - (g - base_global))
                rows.append(
                    BranchAudit(
                        branch_label=b.label,
                        probability=b.probability,
                        global_value=g,
                        factor_values=fv,
                        factor_deltas=deltas,
                        offset_residual=residual,
                        deviation_from_preinteraction=g - pre_interaction,
                    )
                )
            audits[name] = rows
            if projectors is not None:
                obs = entry.observable
                comms = [commutator_norm(obs, p) for p in projectors.projectors]
                classification[name] = (
                    "commuting"
                    if all(c <= COMMUTATOR_TOL for c in comms)
                    else "non-commuting projector"
                )
        event = MeasurementEvent(
            t=float(t),
            baseline_values=baseline_values,
            audits=audits,
            probabilities={b.label: b.probability for b in branches},
            classification=classification,
        )
        self._events.append(event)
        return event

    def report(self) -> ConservationReport:
        """Freeze the ledger into a report with stable ordering."""
        if not any(self._series.values()):
            raise ValueError("ledger has no snapshots")
        names = tuple(sorted(self._entries))
        drift = 0.0
        for name in names:
            rows = self._series[name]
            if not rows or not self._entries[name].conserved:
                continue
            first = rows[0]["global"]
            drift = max(drift, max(abs(r["global"] - first) for r in rows))
        residuals = []
        for ev in self._events:
            for name in names:
                for row in ev.audits.get(name, []):
                    if row.offset_residual is not None:
                        residuals.append(row.offset_residual)
        return ConservationReport(
            entry_names=names,
            conserved_tags={n: self._entries[n].conserved for n in names},
            commutators={n: self._entries[n].commutator_with_h for n in names},
            series={n: list(self._series[n]) for n in names},
            events=list(self._events),
            max_unitary_drift=drift,
            branch_offset_residuals=residuals,
        )
