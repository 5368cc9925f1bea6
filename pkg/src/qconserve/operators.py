"""Hermitian observables and Hamiltonians, and the conservation criterion.

Operators are dense self-adjoint matrices; diagonal operators additionally
keep their diagonal so expectation values and commutators with them avoid
full matrix products. Operators built as functions of one spectral
decomposition share an ``eigenbasis_token``, which certifies exact
commutation without a numerically noisy matrix product.

Natural units: hbar = 1.
"""

from __future__ import annotations

import numpy as np

from .grids import GridSpec
from .states import SpaceLayout, StateVector

HERMITICITY_TOL = 1e-10
COMMUTATOR_TOL = 1e-10
IMAG_RESIDUE_TOL = 1e-10


class HermitianOperator:
    """A self-adjoint operator on one factor or on a full layout.

    ``scope`` is a factor label for factor-local operators and ``None``
    for operators acting on a full layout. Factor-local operators are
    embedded with identities automatically where a full-scope operator is
    required.
    """

    def __init__(
        self,
        matrix: np.ndarray | None = None,
        scope: str | None = None,
        *,
        diagonal: np.ndarray | None = None,
        eigenbasis_token: str | None = None,
    ) -> None:
        if (matrix is None) == (diagonal is None):
            raise ValueError("provide exactly one of matrix= or diagonal=")
        if diagonal is not None:
            diag = np.asarray(diagonal, dtype=np.float64).reshape(-1)
            if not np.all(np.isfinite(diag)):
                raise ValueError("diagonal contains NaN or Inf")
            self._diagonal: np.ndarray | None = diag
            self._matrix: np.ndarray | None = None
            self.dimension = diag.size
        else:
            m = np.asarray(matrix, dtype=np.complex128)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError(f"operator matrix must be square, got {m.shape}")
            dev = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
            if dev > HERMITICITY_TOL:
                raise ValueError(f"matrix deviates from self-adjointness by {dev:.3e}")
            self._matrix = 0.5 * (m + m.conj().T)
            self._diagonal = None
            self.dimension = m.shape[0]
        self.scope = scope
        self.eigenbasis_token = eigenbasis_token

    @classmethod
    def from_diagonal(
        cls,
        values,
        scope: str | None = None,
        eigenbasis_token: str | None = None,
    ) -> "HermitianOperator":
        return cls(diagonal=values, scope=scope, eigenbasis_token=eigenbasis_token)

    @property
    def is_diagonal(self) -> bool:
        return self._diagonal is not None

    @property
    def diagonal(self) -> np.ndarray:
        if self._diagonal is None:
            raise ValueError("operator is not stored diagonally")
        return self._diagonal

    @property
    def matrix(self) -> np.ndarray:
        """Dense matrix form (materialized on demand for diagonal storage)."""
        if self._matrix is None:
            self._matrix = np.diag(self._diagonal.astype(np.complex128))
        return self._matrix

    def apply(self, vec: np.ndarray) -> np.ndarray:
        if self._diagonal is not None:
            return self._diagonal * vec
        return self._matrix @ vec

    def __add__(self, other: "HermitianOperator") -> "HermitianOperator":
        self._require_same_scope(other)
        if self.is_diagonal and other.is_diagonal:
            return HermitianOperator.from_diagonal(
                self._diagonal + other._diagonal, scope=self.scope
            )
        return HermitianOperator(self.matrix + other.matrix, scope=self.scope)

    def __mul__(self, scalar: float) -> "HermitianOperator":
        s = float(scalar)
        if self.is_diagonal:
            return HermitianOperator.from_diagonal(
                self._diagonal * s,
                scope=self.scope,
                eigenbasis_token=self.eigenbasis_token,
            )
        return HermitianOperator(
            self.matrix * s, scope=self.scope, eigenbasis_token=self.eigenbasis_token
        )

    __rmul__ = __mul__

    def _require_same_scope(self, other: "HermitianOperator") -> None:
        if self.scope != other.scope or self.dimension != other.dimension:
            raise ValueError(
                f"operator scopes differ: {self.scope!r}/{self.dimension} vs "
                f"{other.scope!r}/{other.dimension}"
            )

    def __repr__(self) -> str:
        kind = "diag" if self.is_diagonal else "dense"
        return f"HermitianOperator({kind}, dim={self.dimension}, scope={self.scope!r})"


def identity(dim: int, scope: str | None = None) -> HermitianOperator:
    return HermitianOperator.from_diagonal(np.ones(dim), scope=scope)


def sigma_x(scope: str | None = None) -> HermitianOperator:
    return HermitianOperator(np.array([[0, 1], [1, 0]], dtype=complex), scope)


def sigma_y(scope: str | None = None) -> HermitianOperator:
    return HermitianOperator(np.array([[0, -1j], [1j, 0]]), scope)


def sigma_z(scope: str | None = None) -> HermitianOperator:
    return HermitianOperator.from_diagonal([1.0, -1.0], scope=scope)


def embed(
    local: HermitianOperator, layout: SpaceLayout, at: str
) -> HermitianOperator:
    """Extend a factor-local operator to the full layout with identities."""
    pos = layout.index_of(at)
    dim = layout.factors[pos].dimension
    if local.dimension != dim:
        raise ValueError(
            f"operator dimension {local.dimension} does not match factor "
            f"{at!r} dimension {dim}"
        )
    d_left = int(np.prod(layout.shape[:pos], initial=1))
    d_right = int(np.prod(layout.shape[pos + 1 :], initial=1))
    if local.is_diagonal:
        diag = np.kron(np.kron(np.ones(d_left), local.diagonal), np.ones(d_right))
        return HermitianOperator.from_diagonal(diag, scope=None)
    m = np.kron(np.kron(np.eye(d_left), local.matrix), np.eye(d_right))
    return HermitianOperator(m, scope=None)


def _as_full_scope(q: HermitianOperator, psi: StateVector) -> HermitianOperator:
    if q.scope is not None:
        return embed(q, psi.layout, q.scope)
    if q.dimension != psi.layout.total_dimension:
        raise ValueError(
            f"full-scope operator dimension {q.dimension} does not match "
            f"layout dimension {psi.layout.total_dimension}"
        )
    return q


def expectation(q: HermitianOperator, psi: StateVector) -> float:
    """<psi|Q|psi> as a real number.

    The imaginary residue of the quadratic form is asserted below
    1e-10 and discarded; factor-local operators are embedded first.
    """
    psi.require_normalized()
    q = _as_full_scope(q, psi)
    if q.is_diagonal:
        return float(np.sum(q.diagonal * np.abs(psi.amplitudes) ** 2))
    val = complex(np.vdot(psi.amplitudes, q.matrix @ psi.amplitudes))
    if abs(val.imag) > IMAG_RESIDUE_TOL * max(1.0, abs(val.real)):
        raise ValueError(f"expectation has imaginary residue {val.imag:.3e}")
    return float(val.real)


def commutator_norm(h: HermitianOperator, q: HermitianOperator) -> float:
    """Frobenius norm of HQ - QH.

    Exact zero is returned when both operators carry the same eigenbasis
    token (they are functions of one spectral decomposition) or when both
    are diagonal. A single diagonal argument uses the entrywise form
    [D, M]_ij = (d_i - d_j) M_ij, which avoids matrix-product roundoff.
    """
    if h.dimension != q.dimension or h.scope != q.scope:
        raise ValueError(
            f"operator scopes differ: {h.scope!r}/{h.dimension} vs "
            f"{q.scope!r}/{q.dimension}"
        )
    if (
        h.eigenbasis_token is not None
        and h.eigenbasis_token == q.eigenbasis_token
    ):
        return 0.0
    if h.is_diagonal and q.is_diagonal:
        return 0.0
    if h.is_diagonal or q.is_diagonal:
        # ||[D, M]||_F^2 = sum_ij (d_i - d_j)^2 |M_ij|^2, expanded so no
        # n x n temporary beyond |M|^2 is needed
        d = h.diagonal if h.is_diagonal else q.diagonal
        m = q.matrix if h.is_diagonal else h.matrix
        w = m.real**2 + m.imag**2
        row = w.sum(axis=1)
        col = w.sum(axis=0)
        d2 = d * d
        total = float(d2 @ row + d2 @ col - 2.0 * (d @ w @ d))
        return float(np.sqrt(max(total, 0.0)))
    c = h.matrix @ q.matrix
    c -= c.conj().T  # HQ - QH = HQ - (HQ)^dagger for Hermitian H, Q
    return float(np.linalg.norm(c))


def grid_operators(
    g: GridSpec, mass: float = 1.0
) -> tuple[HermitianOperator, HermitianOperator, HermitianOperator]:
    """Position, momentum and kinetic-energy operators for a grid factor.

    Position is diagonal with centered coordinates. Momentum and kinetic
    energy are diagonal in the discrete Fourier basis (exact in-band
    dispersion); both carry a shared eigenbasis token, as does kinetic
    with any other operator built from the same grid's Fourier basis.
    """
    if mass <= 0:
        raise ValueError(f"mass must be positive, got {mass}")
    if not g.periodic:
        raise ValueError("grid operators require a periodic grid")
    x = g.coordinates()
    k = g.wavenumbers()
    token = f"fourier[{g.points},{g.length!r}]"
    position = HermitianOperator.from_diagonal(x, scope=None)
    # Column j of each matrix is IFFT(weights * FFT(e_j)); this is the
    # spectral operator F^dagger diag(w) F without an O(n^3) product.
    fft_eye = np.fft.fft(np.eye(g.points), axis=0)
    momentum_m = np.fft.ifft(k[:, None] * fft_eye, axis=0)
    kinetic_m = np.fft.ifft((k[:, None] ** 2 / (2.0 * mass)) * fft_eye, axis=0)
    del fft_eye
    momentum_m = 0.5 * (momentum_m + momentum_m.conj().T)
    kinetic_m = 0.5 * (kinetic_m + kinetic_m.conj().T)
    momentum = _trusted_hermitian(momentum_m, token)
    kinetic = _trusted_hermitian(kinetic_m, token)
    return position, momentum, kinetic


def _trusted_hermitian(matrix: np.ndarray, token: str) -> HermitianOperator:
    """Wrap an explicitly symmetrized matrix without re-validating it."""
    op = HermitianOperator.__new__(HermitianOperator)
    op._matrix = matrix
    op._diagonal = None
    op.dimension = matrix.shape[0]
    op.scope = None
    op.eigenbasis_token = token
    return op


def spectral_momentum_moment(
    g: GridSpec, amplitudes: np.ndarray, order: int = 1
) -> float:
    """<p^order> of a grid wavefunction via its Fourier weights.

    O(n log n); the route of choice for large grids where a dense momentum
    matrix would be wasteful. ``amplitudes`` must be unit-norm. The even-
    size FFT has one unpaired Nyquist bin standing for both +-k_max; its
    contribution to odd moments cancels by that symmetry and is dropped,
    which keeps odd moments of symmetric states at zero.
    """
    k = g.wavenumbers().copy()
    if order % 2 == 1:
        k[g.points // 2] = 0.0
    weights = np.abs(np.fft.fft(amplitudes)) ** 2
    weights /= weights.sum()
    return float(np.sum(k**order * weights))
