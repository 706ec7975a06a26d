"""Tetrahedral discretization of a voxel mask and the harmonic guide field.

Each occupied voxel is split into 6 tetrahedra along its main diagonal
(the Kuhn split), which is conformal across shared faces by construction.
The guidance field solves the uniform-weight graph-Laplacian Dirichlet
problem with +1/-1 pinned at two chosen vertices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import cg

from .errors import Disconnected, EmptyMask, SolverDiverged
from .volume import OccupancyMask

# Kuhn split: the six monotone corner paths from (0,0,0) to (1,1,1).
_RAW_TETS = [
    [(0, 0, 0), (1, 0, 0), (1, 1, 0), (1, 1, 1)],
    [(0, 0, 0), (1, 0, 0), (1, 0, 1), (1, 1, 1)],
    [(0, 0, 0), (0, 1, 0), (1, 1, 0), (1, 1, 1)],
    [(0, 0, 0), (0, 1, 0), (0, 1, 1), (1, 1, 1)],
    [(0, 0, 0), (0, 0, 1), (1, 0, 1), (1, 1, 1)],
    [(0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 1, 1)],
]


def _oriented_patterns() -> np.ndarray:
    """Corner-offset patterns reordered for positive signed volume."""
    out = []
    for tet in _RAW_TETS:
        p = np.asarray(tet, dtype=np.float64)
        det = np.linalg.det(p[1:] - p[0])
        if det < 0:
            tet = [tet[0], tet[1], tet[3], tet[2]]
        out.append(tet)
    return np.asarray(out, dtype=np.int64)  # (6, 4, 3)


_TET_PATTERNS = _oriented_patterns()

_TET_EDGE_PAIRS = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


@dataclass(frozen=True)
class TetMesh:
    """Vertices, tets and the vertex adjacency of the discretized region.

    vertices : (n, 3) float64 world coordinates
    tets : (m, 4) int32, positively oriented corner indices
    adjacency : symmetric CSR matrix over vertices (tet-edge graph)
    """

    vertices: np.ndarray
    tets: np.ndarray
    adjacency: sparse.csr_matrix

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def neighbors(self, i: int) -> np.ndarray:
        return self.adjacency.indices[
            self.adjacency.indptr[i] : self.adjacency.indptr[i + 1]
        ]

    def edges(self) -> np.ndarray:
        """Unique undirected edges as an (e, 2) array with col0 < col1."""
        coo = sparse.triu(self.adjacency, k=1).tocoo()
        return np.column_stack([coo.row, coo.col])

    def nearest_vertex(self, point) -> int:
        d2 = np.sum((self.vertices - np.asarray(point)) ** 2, axis=1)
        return int(np.argmin(d2))


@dataclass(frozen=True)
class HarmonicField:
    """Per-vertex scalar values with +1 at head and -1 at tail."""

    values: np.ndarray
    head_vertex: int
    tail_vertex: int


def tetrahedralize(mask: OccupancyMask, spacing, origin) -> TetMesh:
    """Split every occupied voxel into 6 conformal tetrahedra.

    Vertices sit on the voxel-corner lattice and are deduplicated across
    voxels. The mask should be connected (run dilate_until_connected
    first); the resulting vertex graph is then connected as well.
    """
    occ = np.argwhere(mask.bits)
    if len(occ) == 0:
        raise EmptyMask("cannot mesh an empty mask")
    nx, ny, nz = mask.dims
    cnx, cny, cnz = nx + 1, ny + 1, nz + 1

    # corner lattice ids for all tet corners of all voxels: (v, 6, 4)
    corners = occ[:, None, None, :] + _TET_PATTERNS[None, :, :, :]
    corner_ids = (
        corners[..., 0] * (cny * cnz) + corners[..., 1] * cnz + corners[..., 2]
    )
    tets_raw = corner_ids.reshape(-1, 4)

    used, tets = np.unique(tets_raw, return_inverse=True)
    tets = tets.reshape(-1, 4).astype(np.int32)

    cz = used % cnz
    cy = (used // cnz) % cny
    cx = used // (cny * cnz)
    lattice = np.column_stack([cx, cy, cz]).astype(np.float64)
    vertices = np.asarray(origin) + (lattice - 0.5) * np.asarray(spacing)

    n = len(vertices)
    rows = np.concatenate([tets[:, a] for a, _ in _TET_EDGE_PAIRS])
    cols = np.concatenate([tets[:, b] for _, b in _TET_EDGE_PAIRS])
    ones = np.ones(len(rows), dtype=np.int8)
    adj = sparse.coo_matrix((ones, (rows, cols)), shape=(n, n)).tocsr()
    adj = adj + adj.T
    adj.data[:] = 1
    return TetMesh(vertices, tets, adj)


def solve_graph_laplacian(
    adjacency: sparse.csr_matrix,
    fixed_idx,
    fixed_vals,
    rtol: float = 1e-8,
) -> np.ndarray:
    """Solve the uniform-weight Laplace problem with Dirichlet values.

    Interior vertices satisfy u_i = mean(u_neighbors). The reduced SPD
    system is solved with Jacobi-preconditioned conjugate gradient to a
    relative residual of `rtol` (max 10 * sqrt(n) iterations).
    """
    n = adjacency.shape[0]
    fixed_idx = np.asarray(fixed_idx, dtype=np.int64)
    fixed_vals = np.asarray(fixed_vals, dtype=np.float64)

    n_comp, labels = connected_components(adjacency, directed=False)
    if n_comp != 1:
        raise Disconnected(f"vertex graph has {n_comp} components")

    deg = np.asarray(adjacency.sum(axis=1)).ravel().astype(np.float64)
    lap = sparse.diags(deg) - adjacency.astype(np.float64)

    free = np.ones(n, dtype=bool)
    free[fixed_idx] = False
    free_ids = np.flatnonzero(free)

    u = np.zeros(n)
    u[fixed_idx] = fixed_vals
    if len(free_ids) == 0:
        return u

    lap_csr = lap.tocsr()
    a = lap_csr[free_ids][:, free_ids]
    b = -lap_csr[free_ids][:, fixed_idx] @ fixed_vals

    inv_diag = 1.0 / a.diagonal()
    precond = sparse.linalg.LinearOperator(
        a.shape, matvec=lambda x: inv_diag * x
    )
    maxiter = int(10 * np.sqrt(len(free_ids))) + 10
    # solve two orders tighter than guaranteed so the check has headroom
    x, info = cg(a, b, rtol=0.01 * rtol, atol=0.0, maxiter=maxiter, M=precond)
    if info != 0:
        raise SolverDiverged(f"conjugate gradient returned info={info}")
    bnorm = np.linalg.norm(b)
    if bnorm > 0 and np.linalg.norm(a @ x - b) > rtol * bnorm * 1.001:
        raise SolverDiverged("residual check failed after convergence")
    u[free_ids] = x
    return u


def solve_harmonic(mesh: TetMesh, head: int, tail: int) -> HarmonicField:
    """Harmonic field on the mesh with u(head)=+1 and u(tail)=-1."""
    if head == tail:
        raise ValueError("head and tail must differ")
    n = mesh.n_vertices
    if not (0 <= head < n and 0 <= tail < n):
        raise IndexError("head/tail out of vertex range")
    values = solve_graph_laplacian(mesh.adjacency, [head, tail], [1.0, -1.0])
    return HarmonicField(values, head, tail)


def export_mesh_ascii(mesh: TetMesh, field: HarmonicField | None, path) -> None:
    """Debug dump: 'v x y z u' per vertex and 't i j k l' per tet."""
    u = field.values if field is not None else np.zeros(mesh.n_vertices)
    with open(path, "w") as f:
        for p, val in zip(mesh.vertices, u):
            f.write(f"v {p[0]:.9g} {p[1]:.9g} {p[2]:.9g} {val:.9g}\n")
        for t in mesh.tets:
            f.write(f"t {t[0]} {t[1]} {t[2]} {t[3]}\n")
