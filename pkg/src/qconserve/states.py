"""Pure states on explicit tensor-product spaces.

A state is a dense complex vector indexed row-major over an ordered list of
factors (leftmost factor varies slowest). The bipartite machinery here --
partial trace, Schmidt decomposition -- is what the entanglement and
measurement layers build on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grids import GridSpec

#: Hard cap on the total dimension of any layout (dense storage only).
MAX_TOTAL_DIMENSION = 2**14

NORM_TOL = 1e-9
SCHMIDT_RANK_CUTOFF = 1e-12


@dataclass(frozen=True)
class Factor:
    """One tensor factor: a label, a dimension and, for discretized
    continuum factors, the grid that produced it."""

    label: str
    dimension: int
    grid: GridSpec | None = None

    def __post_init__(self) -> None:
        if not self.label:
            raise ValueError("factor label must be nonempty")
        if self.dimension < 2:
            raise ValueError(f"factor {self.label!r}: dimension must be >= 2")
        if self.grid is not None and self.grid.points != self.dimension:
            raise ValueError(
                f"factor {self.label!r}: dimension {self.dimension} does not "
                f"match grid points {self.grid.points}"
            )


class SpaceLayout:
    """Ordered tensor factors fixing the factorization of the state space."""

    def __init__(self, factors) -> None:
        facs = []
        for f in factors:
            if isinstance(f, Factor):
                facs.append(f)
            else:
                facs.append(Factor(*f))
        labels = [f.label for f in facs]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate factor labels in {labels}")
        total = 1
        for f in facs:
            total *= f.dimension
        if total > MAX_TOTAL_DIMENSION:
            raise ValueError(
                f"total dimension {total} exceeds dense-storage cap "
                f"{MAX_TOTAL_DIMENSION}"
            )
        self.factors: tuple[Factor, ...] = tuple(facs)
        self.total_dimension: int = total

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(f.label for f in self.factors)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(f.dimension for f in self.factors)

    def index_of(self, label: str) -> int:
        for i, f in enumerate(self.factors):
            if f.label == label:
                return i
        raise ValueError(f"unknown factor label {label!r}")

    def factor(self, label: str) -> Factor:
        return self.factors[self.index_of(label)]

    def __eq__(self, other) -> bool:
        return isinstance(other, SpaceLayout) and self.factors == other.factors

    def __hash__(self) -> int:
        return hash(self.factors)

    def __repr__(self) -> str:
        inner = ", ".join(f"{f.label}:{f.dimension}" for f in self.factors)
        return f"SpaceLayout({inner})"


class StateVector:
    """A pure state: a layout plus a dense, immutable amplitude vector."""

    def __init__(self, layout: SpaceLayout, amplitudes: np.ndarray) -> None:
        amps = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size != layout.total_dimension:
            raise ValueError(
                f"amplitude length {amps.size} does not match layout "
                f"dimension {layout.total_dimension}"
            )
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes contain NaN or Inf")
        amps = amps.copy()
        amps.flags.writeable = False
        self.layout = layout
        self.amplitudes = amps

    @classmethod
    def basis(cls, layout: SpaceLayout, index: int) -> "StateVector":
        amps = np.zeros(layout.total_dimension, dtype=np.complex128)
        amps[index] = 1.0
        return cls(layout, amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm - 1.0) <= tol

    def require_normalized(self, tol: float = NORM_TOL) -> None:
        if not self.is_normalized(tol):
            raise ValueError(f"state is not normalized (norm={self.norm!r})")

    def normalized(self) -> "StateVector":
        n = self.norm
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.layout, self.amplitudes / n)

    def as_tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per factor (read-only view)."""
        return self.amplitudes.reshape(self.layout.shape)

    def __repr__(self) -> str:
        return f"StateVector({self.layout!r}, norm={self.norm:.6g})"


def inner(a: StateVector, b: StateVector) -> complex:
    """Hermitian inner product <a|b>; layouts must match."""
    if a.layout != b.layout:
        raise ValueError("inner product requires identical layouts")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def tensor(a: StateVector, b: StateVector) -> StateVector:
    """Tensor product a (x) b; factor lists are concatenated."""
    common = set(a.layout.labels) & set(b.layout.labels)
    if common:
        raise ValueError(f"label collision in tensor product: {sorted(common)}")
    layout = SpaceLayout(a.layout.factors + b.layout.factors)
    return StateVector(layout, np.kron(a.amplitudes, b.amplitudes))


def permute_factors(psi: StateVector, new_order) -> StateVector:
    """Reorder factors to ``new_order`` (a permutation of the labels).

    The state is physically unchanged; amplitudes are re-indexed without
    arithmetic, so applying the inverse permutation is bit-exact.
    """
    new_order = tuple(new_order)
    if sorted(new_order) != sorted(psi.layout.labels):
        raise ValueError(
            f"{new_order} is not a permutation of {psi.layout.labels}"
        )
    axes = [psi.layout.index_of(lbl) for lbl in new_order]
    new_layout = SpaceLayout([psi.layout.factors[i] for i in axes])
    tensor_amps = psi.as_tensor().transpose(axes)
    return StateVector(new_layout, np.ascontiguousarray(tensor_amps).reshape(-1))


def _resolve_keep(layout: SpaceLayout, keep) -> tuple[int, int]:
    """Map a label or sequence of labels to a contiguous axis range."""
    if isinstance(keep, str):
        keep = (keep,)
    idx = sorted(layout.index_of(lbl) for lbl in keep)
    if not idx:
        raise ValueError("keep group is empty")
    if idx != list(range(idx[0], idx[-1] + 1)):
        raise ValueError(
            f"factor group {tuple(keep)} is not contiguous in layout order; "
            "permute_factors first"
        )
    return idx[0], idx[-1] + 1


@dataclass(frozen=True)
class ReducedDensity:
    """Reduced density matrix on one side of a bipartition."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("reduced density must be square")
        if np.max(np.abs(m - m.conj().T)) > 1e-10:
            raise ValueError("reduced density is not self-adjoint")
        if abs(np.trace(m).real - 1.0) > NORM_TOL:
            raise ValueError(f"reduced density trace {np.trace(m)!r} != 1")

    def eigenvalues(self) -> np.ndarray:
        """Real spectrum in descending order."""
        w = np.linalg.eigvalsh(self.matrix)
        if w.min() < -1e-10:
            raise ValueError(f"reduced density has negative eigenvalue {w.min()}")
        return w[::-1]


def partial_trace(psi: StateVector, keep) -> ReducedDensity:
    """Trace out everything but the contiguous factor group ``keep``."""
    psi.require_normalized()
    lo, hi = _resolve_keep(psi.layout, keep)
    shape = psi.layout.shape
    d_left = int(np.prod(shape[:lo], initial=1))
    d_keep = int(np.prod(shape[lo:hi]))
    d_right = int(np.prod(shape[hi:], initial=1))
    t = psi.amplitudes.reshape(d_left, d_keep, d_right)
    rho = np.einsum("akb,alb->kl", t, t.conj())
    # Symmetrize away roundoff so the invariant check is strict.
    rho = 0.5 * (rho + rho.conj().T)
    return ReducedDensity(rho)


@dataclass(frozen=True)
class SchmidtDecomposition:
    """Biorthogonal form sum_i c_i |l_i> (x) |r_i> across one cut.

    Coefficients are non-negative and non-increasing; columns of
    ``left_vectors``/``right_vectors`` are the orthonormal sides. The phase
    convention makes each left vector's largest-magnitude component real
    and non-negative (ties broken at the lowest index).
    """

    coefficients: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray

    @property
    def rank(self) -> int:
        return int(np.sum(self.coefficients > SCHMIDT_RANK_CUTOFF))

    def reconstruct(self) -> np.ndarray:
        """Flat amplitude vector sum_i c_i l_i (x) r_i."""
        scaled = self.left_vectors * self.coefficients[None, :]
        return (scaled @ self.right_vectors.T).reshape(-1)

    def entropy(self) -> float:
        """Entanglement entropy in nats from the squared coefficients."""
        lam = self.coefficients**2
        lam = lam[lam > 0.0]
        return float(-np.sum(lam * np.log(lam)))


def schmidt(psi: StateVector, cut: int) -> SchmidtDecomposition:
    """Schmidt decomposition across the bipartition before factor ``cut``."""
    psi.require_normalized()
    nfac = len(psi.layout.factors)
    if not (0 < cut < nfac):
        raise ValueError(f"cut {cut} leaves an empty side (factors={nfac})")
    shape = psi.layout.shape
    d_left = int(np.prod(shape[:cut]))
    d_right = int(np.prod(shape[cut:]))
    m = psi.amplitudes.reshape(d_left, d_right)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    # psi = sum_i s_i u[:, i] (x) vh[i, :], so the right vectors are the
    # *unconjugated* rows of vh.
    v = vh.T.copy()
    u = u.copy()
    for i in range(s.size):
        col = u[:, i]
        j = int(np.argmax(np.abs(col)))
        mag = abs(col[j])
        if mag > 0.0:
            phase = col[j] / mag
            u[:, i] = col / phase
            v[:, i] = v[:, i] * phase
    return SchmidtDecomposition(coefficients=s, left_vectors=u, right_vectors=v)
