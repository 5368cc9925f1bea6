"""Stern-Gerlach momentum bookkeeping with an explicit apparatus.

An x-up spin passes a field region that deflects its z-up and z-down
components oppositely. Both the particle and the field apparatus live on
truncated momentum ladders, and the deflection is an exchange unitary --
spin-up kicks the particle up one ladder step and the apparatus down one,
spin-down the reverse. The unitary permutes basis states only *within*
eigenspaces of the total z-momentum (wrapping cyclically inside each
eigenspace chain), so the total is conserved identically; what each branch
shows after detecting the particle's momentum sign is pure redistribution.

An optional second pair of ladders applies the same exchange structure to
a z-angular-momentum quantum, mirroring the qualitative angular-momentum
offsets of the deflection story without torque dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from ..dynamics import apply_unitary
from ..errors import LadderEdgeError
from ..ledger import ConservationLedger, LedgerEntry
from ..measurement import indicator_projectors, measure
from ..operators import HermitianOperator, embed, expectation, sigma_x, sigma_z
from ..states import SpaceLayout, StateVector

EDGE_MASS_TOL = 1e-12


@dataclass(frozen=True)
class SternGerlachSpec:
    """Exchange kick, ladder sizes, and optional angular-momentum ledger.

    ``apparatus_spread`` is the standard deviation (in ladder steps) of a
    Gaussian initial apparatus state; zero means a sharp pointer, making
    the two conditional pointer states exactly orthogonal.
    """

    kick: float = 1.0
    particle_mode_dim: int = 7
    apparatus_mode_dim: int = 7
    apparatus_spread: float = 0.0
    track_angular_momentum: bool = False
    angular_mode_dim: int = 5

    def __post_init__(self) -> None:
        if not (self.kick > 0 and np.isfinite(self.kick)):
            raise ValueError("kick must be positive and finite")
        if self.particle_mode_dim < 3 or self.apparatus_mode_dim < 3:
            raise ValueError("mode dimensions must be >= 3")
        if self.apparatus_spread < 0:
            raise ValueError("apparatus_spread must be >= 0")
        if self.track_angular_momentum and self.angular_mode_dim < 3:
            raise ValueError("angular_mode_dim must be >= 3")


def _ladder_values(dim: int) -> np.ndarray:
    return np.arange(dim, dtype=float) - dim // 2


def _exchange_permutation(sizes: tuple[int, ...], dirs: tuple[int, ...]):
    """Permutation stepping every axis by its direction, wrapping each
    conserved chain cyclically. Returns (targets, wrap_mask) over flat
    indices; wrap_mask marks sources whose step leaves the lattice."""
    idx = np.indices(sizes).reshape(len(sizes), -1)
    fwd = np.full(idx.shape[1], np.iinfo(np.int64).max, dtype=np.int64)
    back = np.full(idx.shape[1], np.iinfo(np.int64).max, dtype=np.int64)
    for ax, (size, d) in enumerate(zip(sizes, dirs)):
        room_fwd = (size - 1 - idx[ax]) if d > 0 else idx[ax]
        room_back = idx[ax] if d > 0 else (size - 1 - idx[ax])
        fwd = np.minimum(fwd, room_fwd)
        back = np.minimum(back, room_back)
    wrap = fwd == 0
    step = np.where(wrap, -back, 1)
    target_idx = idx + np.array(dirs)[:, None] * step[None, :]
    targets = np.ravel_multi_index(target_idx, sizes)
    return targets, wrap


@lru_cache(maxsize=None)
def _cycle_generator(length: int) -> np.ndarray:
    """Hermitian h with expm(-ih) equal to the length-L cyclic shift."""
    if length == 1:
        return np.zeros((1, 1), dtype=complex)
    c = np.zeros((length, length), dtype=complex)
    c[(np.arange(length) + 1) % length, np.arange(length)] = 1.0
    h = 1j * scipy.linalg.logm(c)
    return 0.5 * (h + h.conj().T)


def _permutation_data(sizes, dirs):
    """Permutation matrix and Hermitian generator for one spin sector."""
    targets, _ = _exchange_permutation(sizes, dirs)
    n = targets.size
    perm = np.zeros((n, n), dtype=complex)
    perm[targets, np.arange(n)] = 1.0
    h = np.zeros((n, n), dtype=complex)
    seen = np.zeros(n, dtype=bool)
    for start in range(n):
        if seen[start]:
            continue
        cycle = [start]
        seen[start] = True
        cur = int(targets[start])
        while cur != start:
            cycle.append(cur)
            seen[cur] = True
            cur = int(targets[cur])
        block = _cycle_generator(len(cycle))
        h[np.ix_(cycle, cycle)] = block
    return perm, h


def run_stern_gerlach(spec: SternGerlachSpec) -> dict:
    """Run the deflection interaction, sign measurement, and ledgers."""
    kick = spec.kick
    dims = [spec.particle_mode_dim, spec.apparatus_mode_dim]
    labels = ["particle", "apparatus"]
    if spec.track_angular_momentum:
        dims += [spec.angular_mode_dim, spec.angular_mode_dim]
        labels += ["particle_l", "apparatus_l"]
    sizes = tuple(dims)
    layout = SpaceLayout([("spin", 2)] + list(zip(labels, dims)))

    # initial: spin x-up, particle centered, apparatus sharp or Gaussian
    spin0 = np.array([1.0, 1.0]) / np.sqrt(2.0)
    parts = []
    for lbl, d in zip(labels, dims):
        v = np.zeros(d)
        if lbl == "apparatus" and spec.apparatus_spread > 0:
            v = np.exp(-(_ladder_values(d) ** 2) / (4.0 * spec.apparatus_spread**2))
            v /= np.linalg.norm(v)
        else:
            v[d // 2] = 1.0
        parts.append(v)
    ladder0 = parts[0]
    for v in parts[1:]:
        ladder0 = np.kron(ladder0, v)
    psi0 = StateVector(layout, np.kron(spin0, ladder0))

    dirs_up = tuple(+1 if i % 2 == 0 else -1 for i in range(len(dims)))
    dirs_down = tuple(-d for d in dirs_up)
    _, wrap_up = _exchange_permutation(sizes, dirs_up)
    _, wrap_down = _exchange_permutation(sizes, dirs_down)
    sector_mass = np.abs(ladder0) ** 2
    edge_mass = max(
        float(sector_mass[wrap_up].sum()), float(sector_mass[wrap_down].sum())
    )
    if edge_mass > EDGE_MASS_TOL:
        raise LadderEdgeError(
            f"kick would wrap ladder population of mass {edge_mass:.3e}; "
            "enlarge the mode dimensions"
        )

    perm_up, h_up = _permutation_data(sizes, dirs_up)
    perm_down, h_down = _permutation_data(sizes, dirs_down)
    n_lat = perm_up.shape[0]
    u = np.zeros((2 * n_lat, 2 * n_lat), dtype=complex)
    u[:n_lat, :n_lat] = perm_up
    u[n_lat:, n_lat:] = perm_down
    h_int = np.zeros_like(u)
    h_int[:n_lat, :n_lat] = h_up
    h_int[n_lat:, n_lat:] = h_down
    h_op = HermitianOperator(h_int)

    p_particle = HermitianOperator.from_diagonal(
        kick * _ladder_values(dims[0]), scope="particle"
    )
    p_apparatus = HermitianOperator.from_diagonal(
        kick * _ladder_values(dims[1]), scope="apparatus"
    )
    total_pz = embed(p_particle, layout, "particle") + embed(
        p_apparatus, layout, "apparatus"
    )

    ledger = ConservationLedger()
    ledger.register(
        LedgerEntry(
            name="total_pz",
            observable=total_pz,
            local_terms=(("particle", p_particle), ("apparatus", p_apparatus)),
        ),
        h_op,
    )
    ledger.register(
        LedgerEntry(
            name="spin_z",
            observable=embed(sigma_z("spin"), layout, "spin"),
            local_terms=(("spin", sigma_z("spin")),),
        ),
        h_op,
    )
    ledger.register(
        LedgerEntry(
            name="spin_x",
            observable=embed(sigma_x("spin"), layout, "spin"),
            local_terms=(("spin", sigma_x("spin")),),
        ),
        h_op,
    )
    if spec.track_angular_momentum:
        l_particle = HermitianOperator.from_diagonal(
            _ladder_values(dims[2]), scope="particle_l"
        )
        l_apparatus = HermitianOperator.from_diagonal(
            _ladder_values(dims[3]), scope="apparatus_l"
        )
        ledger.register(
            LedgerEntry(
                name="total_lz",
                observable=embed(l_particle, layout, "particle_l")
                + embed(l_apparatus, layout, "apparatus_l"),
                local_terms=(
                    ("particle_l", l_particle),
                    ("apparatus_l", l_apparatus),
                ),
            ),
            h_op,
        )

    ledger.snapshot(0.0, psi0)
    pre = {
        "total_pz": expectation(total_pz, psi0),
        "sigma_x": expectation(sigma_x("spin"), psi0),
        "sigma_z": expectation(sigma_z("spin"), psi0),
    }

    psi1 = apply_unitary(u, psi0)
    ledger.snapshot(1.0, psi1)

    # conditional pointer states and residual x-coherence; <sigma_x> after
    # the interaction equals Re of the full correlated-environment overlap
    t = psi1.as_tensor().reshape(2, -1)
    up_part, down_part = t[0], t[1]
    nu, nd = np.linalg.norm(up_part), np.linalg.norm(down_part)
    pointer_overlap = complex(np.vdot(down_part, up_part) / (nu * nd))
    post_sigma_x = expectation(sigma_x("spin"), psi1)
    # apparatus-only pointers: the spin-conditioned apparatus states are
    # the initial pointer shifted one step down (spin up) or up (spin down)
    app0 = parts[1]
    app_up = np.zeros_like(app0)
    app_up[:-1] = app0[1:]
    app_down = np.zeros_like(app0)
    app_down[1:] = app0[:-1]
    apparatus_overlap = float(np.dot(app_down, app_up))

    # detect the particle's momentum sign
    values = _ladder_values(dims[0])
    ps = indicator_projectors(
        layout,
        "particle",
        {
            "z_up": values > 0,
            "z_down": values < 0,
            "undeflected": values == 0,
        },
    )
    branches = measure(psi1, ps)
    event = ledger.record_measurement(branches, psi1, t=1.0, projectors=ps)

    branch_rows = []
    for b in branches:
        row = {"label": b.label, "probability": b.probability}
        if b.state is not None:
            audit = next(
                a for a in event.audits["total_pz"] if a.branch_label == b.label
            )
            row["factor_pz"] = audit.factor_values
            row["factor_deltas"] = audit.factor_deltas
            row["total_pz"] = audit.global_value
            row["offset_residual"] = audit.offset_residual
            row["deviation_from_preinteraction"] = (
                audit.deviation_from_preinteraction
            )
        branch_rows.append(row)

    return {
        "spec": {
            "kick": kick,
            "particle_mode_dim": dims[0],
            "apparatus_mode_dim": dims[1],
            "apparatus_spread": spec.apparatus_spread,
            "track_angular_momentum": spec.track_angular_momentum,
        },
        "pre_interaction": pre,
        "post_interaction": {
            "total_pz": expectation(total_pz, psi1),
            "sigma_x": post_sigma_x,
            "sigma_z": expectation(sigma_z("spin"), psi1),
        },
        "pointer_overlap_real": pointer_overlap.real,
        "pointer_overlap_abs": abs(pointer_overlap),
        "apparatus_pointer_overlap": apparatus_overlap,
        "branches": branch_rows,
        "event_classification": dict(event.classification),
        "ledger": ledger.report(),
    }
