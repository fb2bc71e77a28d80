"""Overlapping mesh decomposition: disjoint interiors plus buffer rings.

Each subdomain owns a contiguous interior block D_i; the local problem is
solved on M_i = D_i union B_i, where the buffer B_i absorbs the influence
of the rest of the mesh over one step. After the step only interior values
are kept, so every global degree of freedom is written by exactly one
subdomain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Union

import numpy as np

from .models import Mesh, SemiDiscreteSystem, StabilityParams
from .sparse import BandedSparseMatrix, IndexSet

__all__ = [
    "Partition",
    "LocalSystem",
    "make_partition",
    "suggest_buffer",
    "extract_local",
    "gather_overwrite",
]


@dataclass(frozen=True)
class Partition:
    """Disjoint interiors, per-subdomain buffers, and their unions."""

    D: int
    interiors: List[IndexSet]
    buffers: List[IndexSet]
    locals: List[IndexSet]
    layout: str
    n_total: int
    b_nominal: int = 0

    def __post_init__(self):
        if self.D != len(self.interiors) or self.D != len(self.buffers):
            raise ValueError("one interior and one buffer per subdomain")
        seen = np.zeros(self.n_total, dtype=bool)
        for i in range(self.D):
            d_i = self.interiors[i].indices
            if seen[d_i].any():
                raise ValueError("interiors must be pairwise disjoint")
            seen[d_i] = True
            b_i = self.buffers[i].indices
            if np.intersect1d(d_i, b_i, assume_unique=True).size:
                raise ValueError(f"buffer of subdomain {i} overlaps its interior")
            m_i = self.locals[i].indices
            if not np.array_equal(m_i, np.union1d(d_i, b_i)):
                raise ValueError(f"local set of subdomain {i} is not D_i union B_i")
        if not seen.all():
            raise ValueError("interiors must cover every mesh index")

    def interior_positions(self, i: int) -> np.ndarray:
        """Positions of D_i inside M_i (for gathering local results)."""
        return self.locals[i].positions_of(self.interiors[i])

    def describe(self) -> str:
        lines = [f"{self.layout}: {self.D} subdomains over {self.n_total} nodes"]
        for i in range(self.D):
            d_i, b_i = self.interiors[i], self.buffers[i]
            lines.append(
                f"  subdomain {i}: interior [{d_i.indices[0]}..{d_i.indices[-1]}] "
                f"({len(d_i)} nodes), buffer {len(b_i)} nodes"
            )
        return "\n".join(lines)

    @property
    def dof_updates_per_step(self) -> int:
        """Total degrees of freedom written per step, buffers included."""
        return sum(len(m) for m in self.locals)


@dataclass
class LocalSystem:
    """One subdomain's problem with exterior couplings frozen at t_n.

    For linear systems ``matrix_or_rhs`` is the restricted matrix A_{M_i}
    and ``boundary_forcing`` carries A[r, c]*u_global[c] for columns c
    outside M_i (inhomogeneous Dirichlet data, constant over the step).
    For nonlinear systems it is a callable rhs(v_local, t) that evaluates
    the global stencil with exterior values frozen.
    """

    owner: int
    matrix_or_rhs: Union[BandedSparseMatrix, Callable]
    boundary_forcing: np.ndarray
    local_to_global: IndexSet


def _block_sizes(n: int, d: int) -> List[int]:
    base, rem = divmod(n, d)
    return [base + 1 if i < rem else base for i in range(d)]


def _buffer_for_block(start: int, stop: int, b: int, n: int,
                      periodic: bool) -> np.ndarray:
    if b == 0:
        return np.empty(0, dtype=np.int64)
    left = np.arange(start - b, start)
    right = np.arange(stop, stop + b)
    ring = np.concatenate([left, right])
    if periodic:
        ring %= n
    else:
        ring = ring[(ring >= 0) & (ring < n)]
    return np.unique(ring)


def make_partition(mesh: Mesh, d: int, b: int,
                   layout: Optional[str] = None) -> Partition:
    """Split the mesh into d contiguous interior blocks with b-node buffers.

    1D meshes are split along their only axis; 2D meshes are split into
    column blocks along the first (horizontal) axis, with buffers extending
    only along that axis and b counting grid columns. Periodic buffers wrap
    across the ends; Dirichlet buffers are clipped at physical boundaries.
    With d=1 the buffer is empty by construction: the single subdomain has
    no exterior. Remainders go to the leading subdomains.
    """
    if d < 1:
        raise ValueError("need at least one subdomain")
    if b < 0:
        raise ValueError("buffer size must be nonnegative")
    if layout is None:
        layout = "blocks1d" if mesh.dim == 1 else "columns2d"
    if layout not in ("blocks1d", "columns2d"):
        raise ValueError(f"unknown layout {layout!r}")
    if layout == "blocks1d" and mesh.dim != 1:
        raise ValueError("blocks1d layout needs a 1D mesh")
    if layout == "columns2d" and mesh.dim != 2:
        raise ValueError("columns2d layout needs a 2D mesh")

    n_axis = mesh.n[0]
    periodic = mesh.boundary[0] == "periodic"
    if d > n_axis:
        raise ValueError(f"cannot split {n_axis} nodes into {d} subdomains")
    sizes = _block_sizes(n_axis, d)
    b_eff = 0 if d == 1 else b
    if d > 1 and periodic and b > n_axis - max(sizes):
        raise ValueError(
            f"buffer of {b} nodes per side wraps onto its own interior "
            f"(only {n_axis - max(sizes)} exterior nodes along the axis)")

    interiors, buffers, local_sets = [], [], []
    start = 0
    for size in sizes:
        stop = start + size
        axis_interior = np.arange(start, stop)
        axis_buffer = _buffer_for_block(start, stop, b_eff, n_axis, periodic)
        if layout == "blocks1d":
            d_i, b_i = axis_interior, axis_buffer
        else:
            # expand column indices to all rows of the flattened grid
            ny = mesh.n[1]
            d_i = (axis_interior[:, None] * ny + np.arange(ny)).reshape(-1)
            b_i = (axis_buffer[:, None] * ny + np.arange(ny)).reshape(-1)
        interiors.append(IndexSet(np.sort(d_i)))
        buffers.append(IndexSet(np.sort(b_i)))
        local_sets.append(IndexSet(np.union1d(d_i, b_i)))
        start = stop

    return Partition(D=d, interiors=interiors, buffers=buffers,
                     locals=local_sets, layout=layout,
                     n_total=mesh.n_total, b_nominal=b_eff)


def suggest_buffer(params: StabilityParams) -> int:
    """Heuristic buffer width from the stability parameters.

    ceil(2*max(C, mu)) + 6, at least 4. Advisory only: an explicit buffer
    size in a benchmark configuration always takes precedence.
    """
    return max(4, math.ceil(2 * max(params.courant, params.mu)) + 6)


def extract_local(system: SemiDiscreteSystem, part: Partition, i: int,
                  u_global: np.ndarray, t_n: float = 0.0) -> LocalSystem:
    """Restrict the system to M_i with exterior data frozen at t_n.

    Linear systems return the restricted matrix plus a forcing vector that
    collects the couplings into nodes outside M_i (evaluated on u_global)
    and the restriction of any global forcing at t_n. Nonlinear systems
    return a local rhs closure that embeds the local state into the frozen
    global one.
    """
    if not 0 <= i < part.D:
        raise ValueError(f"subdomain id {i} outside 0..{part.D - 1}")
    m_i = part.locals[i]
    idx = m_i.indices

    if system.is_linear:
        a_loc = system.linear_matrix.restrict(idx, idx)
        halo = system.linear_matrix.halo(idx, idx)
        forcing = halo.matvec(u_global)
        if system.forcing is not None:
            forcing = forcing + system.forcing(t_n)[idx]
        return LocalSystem(owner=i, matrix_or_rhs=a_loc,
                           boundary_forcing=forcing, local_to_global=m_i)

    frozen = u_global.copy()

    def local_rhs(v_local: np.ndarray, t: float) -> np.ndarray:
        full = frozen.copy()
        full[idx] = v_local
        return system.rhs(full, t)[idx]

    return LocalSystem(owner=i, matrix_or_rhs=local_rhs,
                       boundary_forcing=np.zeros(len(m_i)),
                       local_to_global=m_i)


def gather_overwrite(part: Partition, locals_out: List[np.ndarray],
                     u_next: np.ndarray) -> np.ndarray:
    """Assemble the next global state from local results, interiors only.

    Buffer results are discarded; every global index receives the value
    computed by its unique owner.
    """
    if len(locals_out) != part.D:
        raise ValueError(f"expected {part.D} local results, got {len(locals_out)}")
    dtype = np.result_type(u_next.dtype, *(v.dtype for v in locals_out))
    out = np.empty(part.n_total, dtype=dtype)
    for i, v_loc in enumerate(locals_out):
        if v_loc.shape != (len(part.locals[i]),):
            raise ValueError(f"local result {i} has wrong length")
        out[part.interiors[i].indices] = v_loc[part.interior_positions(i)]
    return out
