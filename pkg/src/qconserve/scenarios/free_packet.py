"""Free Gaussian packet, spreading, and the detected-segment momentum.

A zero-mean-momentum Gaussian spreads freely; detecting the particle in a
small window around x* at time t selects the momentum components that
interfere constructively there, so the renormalized segment carries
<p> close to m*x*/t even though the global <p> never moved. The audit
classifies the discrepancy: position-window projectors do not commute
with momentum, so the Born-weighted branch values need not reproduce the
pre-measurement expectation -- an apparent, not real, violation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dynamics import DEFAULT_SPLIT_STEPS, evolve_split_step
from ..errors import BoundaryClearanceError
from ..grids import GridSpec
from ..ledger import ConservationLedger, LedgerEntry
from ..measurement import measure, total_expectation_audit, window_projector
from ..operators import (
    HermitianOperator,
    expectation,
    grid_operators,
    spectral_momentum_moment,
)
from ..states import SpaceLayout, StateVector

BOUNDARY_CLEARANCE_SIGMAS = 6.0


@dataclass(frozen=True)
class GaussianPacketSpec:
    """Initial width a, mass, grid, and the detection window."""

    a: float = 1.0
    mass: float = 1.0
    grid: GridSpec = field(default_factory=lambda: GridSpec(4096, 200.0))
    detect_time: float = 20.0
    window_center: float = 10.0
    window_width: float = 1.0
    snapshots: int = 5
    steps: int = DEFAULT_SPLIT_STEPS

    def __post_init__(self) -> None:
        if not (self.a > 0 and np.isfinite(self.a)):
            raise ValueError("a must be positive and finite")
        if not (self.mass > 0 and np.isfinite(self.mass)):
            raise ValueError("mass must be positive and finite")
        if not (self.detect_time > 0 and np.isfinite(self.detect_time)):
            raise ValueError("detect_time must be positive and finite")
        if not (self.window_width > 0 and np.isfinite(self.window_width)):
            raise ValueError("window_width must be positive")
        if self.a < 8.0 * self.grid.spacing:
            raise ValueError(
                f"a={self.a} under-resolved: need a >= 8*dx = {8*self.grid.spacing}"
            )
        half = 0.5 * self.grid.length
        lo, hi = self.window_bounds
        if not (-half < lo and hi < half):
            raise ValueError(f"window [{lo}, {hi}] extends outside the grid")
        if self.snapshots < 2:
            raise ValueError("snapshots must be >= 2")

    @property
    def window_bounds(self) -> tuple[float, float]:
        return (
            self.window_center - 0.5 * self.window_width,
            self.window_center + 0.5 * self.window_width,
        )

    def sigma_at(self, t: float) -> float:
        """Analytic packet width sqrt(<x^2>) at time t."""
        return self.a * np.sqrt(1.0 + (t / (2.0 * self.mass * self.a**2)) ** 2)


def _segment_momentum_fd(g: GridSpec, amps: np.ndarray) -> float:
    """Independent <p> route: Im(psi* dpsi/dx) by central differences."""
    dx = g.spacing
    dpsi = (np.roll(amps, -1) - np.roll(amps, 1)) / (2.0 * dx)
    dens = np.imag(np.conj(amps) * dpsi)
    return float(np.sum(dens))  # amplitudes carry 1/sqrt(dx) normalization


def run_free_packet(spec: GaussianPacketSpec) -> dict:
    """Evolve, detect in the window, and audit momentum and energy."""
    g = spec.grid
    t_det = spec.detect_time
    sigma_t = spec.sigma_at(t_det)
    if BOUNDARY_CLEARANCE_SIGMAS * sigma_t > 0.5 * g.length:
        raise BoundaryClearanceError(
            f"packet width {sigma_t:.3g} at t={t_det} violates the "
            f"{BOUNDARY_CLEARANCE_SIGMAS}-sigma boundary clearance"
        )

    layout = SpaceLayout([("x", g.points, g)])
    x = g.coordinates()
    amps = np.exp(-(x**2) / (4.0 * spec.a**2)).astype(complex)
    amps /= np.linalg.norm(amps)
    psi = StateVector(layout, amps)

    position_sq = HermitianOperator.from_diagonal(x**2)
    _, momentum, kinetic = grid_operators(g, spec.mass)

    ledger = ConservationLedger()
    ledger.register(LedgerEntry("momentum", momentum), kinetic)
    ledger.register(LedgerEntry("kinetic_energy", kinetic), kinetic)
    ledger.register(LedgerEntry("position_sq", position_sq), kinetic)

    times = np.linspace(0.0, t_det, spec.snapshots)
    ledger.snapshot(0.0, psi)
    spread_series = [(0.0, expectation(position_sq, psi))]
    for t_prev, t_next in zip(times[:-1], times[1:]):
        seg_steps = max(1, round(spec.steps * (t_next - t_prev) / t_det))
        psi = evolve_split_step(
            g, spec.mass, np.zeros(g.points), psi, t_next - t_prev, seg_steps
        )
        ledger.snapshot(float(t_next), psi)
        spread_series.append((float(t_next), expectation(position_sq, psi)))

    lo, hi = spec.window_bounds
    ps = window_projector(g, lo, hi, layout, "x")
    branches = measure(psi, ps)
    event = ledger.record_measurement(branches, psi, t=t_det, projectors=ps)

    inside = next(b for b in branches if b.label == "inside")
    segment = {
        "probability": inside.probability,
        "momentum": None,
        "momentum_fd_oracle": None,
        "momentum_sq": None,
    }
    predicted = spec.mass * spec.window_center / t_det
    if inside.state is not None:
        seg_amps = inside.state.amplitudes
        segment["momentum"] = spectral_momentum_moment(g, seg_amps, 1)
        segment["momentum_fd_oracle"] = _segment_momentum_fd(g, seg_amps)
        segment["momentum_sq"] = spectral_momentum_moment(g, seg_amps, 2)

    audit_p = total_expectation_audit(psi, ps, momentum)
    audit_t = total_expectation_audit(psi, ps, kinetic)

    return {
        "spec": {
            "a": spec.a,
            "mass": spec.mass,
            "grid_points": g.points,
            "grid_length": g.length,
            "detect_time": t_det,
            "window_center": spec.window_center,
            "window_width": spec.window_width,
        },
        "spread_series": [
            {"t": t, "x_sq": v, "x_sq_analytic": spec.sigma_at(t) ** 2}
            for t, v in spread_series
        ],
        "global_momentum_final": spectral_momentum_moment(g, psi.amplitudes, 1),
        "segment": segment,
        "predicted_segment_momentum": predicted,
        "segment_momentum_error": (
            segment["momentum"] - predicted
            if segment["momentum"] is not None
            else None
        ),
        "initial_momentum_sq": 1.0 / (4.0 * spec.a**2),
        "momentum_audit": {
            "pre": audit_p.pre_value,
            "born_weighted": audit_p.born_weighted,
            "difference": audit_p.difference,
            "classification": audit_p.classification,
        },
        "energy_audit": {
            "pre": audit_t.pre_value,
            "born_weighted": audit_t.born_weighted,
            "difference": audit_t.difference,
            "classification": audit_t.classification,
        },
        "event_classification": dict(event.classification),
        "ledger": ledger.report(),
    }
