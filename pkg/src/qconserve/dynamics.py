"""Unitary time evolution.

Two routes: exact eigendecomposition evolution for small dense systems
(the factorization is reusable across time samples), and second-order
Strang split-step spectral evolution for layouts with one periodic grid
factor plus any number of discrete factors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .grids import GridSpec
from .operators import HermitianOperator
from .states import SpaceLayout, StateVector

#: Dimension cap for the eigendecomposition route.
EXACT_DIMENSION_CAP = 4096

#: Documented default step count for split-step scenario runs.
DEFAULT_SPLIT_STEPS = 1024


class ExactPropagator:
    """Evolution under a time-independent Hamiltonian via its spectrum.

    Diagonal Hamiltonians evolve by entrywise phases; dense ones are
    eigendecomposed once and the factorization reused for every time.
    """

    def __init__(self, h: HermitianOperator) -> None:
        if h.scope is not None:
            raise ValueError("propagator requires a full-scope Hamiltonian")
        if h.dimension > EXACT_DIMENSION_CAP:
            raise ValueError(
                f"dimension {h.dimension} exceeds eigendecomposition cap "
                f"{EXACT_DIMENSION_CAP}"
            )
        if h.is_diagonal:
            self.energies = h.diagonal.copy()
            self.vectors = None
        else:
            w, v = np.linalg.eigh(h.matrix)
            self.energies = w
            self.vectors = v

    @classmethod
    def from_eigensystem(cls, energies: np.ndarray, vectors: np.ndarray | None):
        prop = cls.__new__(cls)
        prop.energies = np.asarray(energies, dtype=np.float64)
        prop.vectors = None if vectors is None else np.asarray(vectors, complex)
        return prop

    def advance(self, psi: StateVector, t: float) -> StateVector:
        phases = np.exp(-1j * self.energies * t)
        if self.vectors is None:
            amps = phases * psi.amplitudes
        else:
            coeffs = self.vectors.conj().T @ psi.amplitudes
            amps = self.vectors @ (phases * coeffs)
        return StateVector(psi.layout, amps)


def evolve_exact(h: HermitianOperator, psi: StateVector, t: float) -> StateVector:
    """One-shot exact evolution; build an ExactPropagator to reuse the
    eigendecomposition over many times."""
    return ExactPropagator(h).advance(psi, t)


def apply_unitary(u: np.ndarray, psi: StateVector) -> StateVector:
    """Apply a global unitary matrix; unitarity is the caller's contract."""
    return StateVector(psi.layout, u @ psi.amplitudes)


def hermitian_generator(u: np.ndarray) -> HermitianOperator:
    """Hermitian H with expm(-iH) = U (principal branch), via a Schur form.

    Intended for modest dimensions; used to register instantaneous
    interaction unitaries with the conservation ledger.
    """
    t, z = scipy.linalg.schur(np.asarray(u, dtype=complex), output="complex")
    offdiag = np.max(np.abs(t - np.diag(np.diag(t))))
    if offdiag > 1e-9:
        raise ValueError(f"matrix is not unitary (Schur off-diagonal {offdiag:.3e})")
    angles = np.angle(np.diag(t))
    return HermitianOperator(z @ np.diag(-angles.astype(complex)) @ z.conj().T)


def _grid_axis(layout: SpaceLayout, g: GridSpec) -> int:
    axes = [
        i
        for i, f in enumerate(layout.factors)
        if f.grid is not None
    ]
    if len(axes) != 1:
        raise ValueError(f"split-step requires exactly one grid factor, found {len(axes)}")
    if layout.factors[axes[0]].grid != g:
        raise ValueError("grid spec does not match the layout's grid factor")
    return axes[0]


def evolve_split_step(
    g: GridSpec,
    mass: float,
    potential,
    psi: StateVector,
    t: float,
    steps: int = DEFAULT_SPLIT_STEPS,
) -> StateVector:
    """Strang-split evolution under p^2/2m + V(x) on the grid factor.

    ``potential`` is a callable of the grid coordinates or an array of
    per-point values; discrete factors ride along untouched. Second-order
    accurate in the step size; norm-preserving by construction.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if mass <= 0:
        raise ValueError(f"mass must be positive, got {mass}")
    if not g.periodic:
        raise ValueError("split-step evolution requires a periodic grid")
    axis = _grid_axis(psi.layout, g)
    x = g.coordinates()
    v = np.asarray(potential(x) if callable(potential) else potential, dtype=float)
    if v.shape != x.shape:
        raise ValueError(f"potential shape {v.shape} does not match grid ({g.points},)")
    if not np.all(np.isfinite(v)):
        raise ValueError("potential contains NaN or Inf")

    dt = t / steps
    k = g.wavenumbers()
    shape = [1] * len(psi.layout.shape)
    shape[axis] = g.points
    half_v = np.exp(-0.5j * dt * v).reshape(shape)
    kin = np.exp(-1j * dt * k**2 / (2.0 * mass)).reshape(shape)

    work = psi.as_tensor().copy()
    work *= half_v
    for step in range(steps):
        work = np.fft.ifft(kin * np.fft.fft(work, axis=axis), axis=axis)
        # merge trailing and leading half-steps between interior steps
        work *= half_v if step == steps - 1 else half_v * half_v
    return StateVector(psi.layout, work.reshape(-1))


@dataclass(frozen=True)
class EvolutionPlan:
    """A declarative evolution request dispatched by :func:`run_plan`."""

    hamiltonian: HermitianOperator | None
    duration: float
    steps: int = 1
    method: str = "exact"
    grid: GridSpec | None = None
    mass: float = 1.0
    potential: object = None

    def __post_init__(self) -> None:
        if not np.isfinite(self.duration):
            raise ValueError("duration must be finite")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.method not in ("exact", "split_step"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "exact" and self.hamiltonian is None:
            raise ValueError("exact evolution requires a Hamiltonian")
        if self.method == "split_step" and self.grid is None:
            raise ValueError("split_step requires kinetic grid metadata")


def run_plan(plan: EvolutionPlan, psi: StateVector) -> StateVector:
    if plan.method == "exact":
        return evolve_exact(plan.hamiltonian, psi, plan.duration)
    potential = plan.potential
    if potential is None:
        potential = np.zeros(plan.grid.points)
    return evolve_split_step(
        plan.grid, plan.mass, potential, psi, plan.duration, plan.steps
    )
