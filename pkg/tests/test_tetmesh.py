from itertools import combinations

import numpy as np
import pytest
from scipy import sparse

from unbend import OccupancyMask, solve_harmonic, tetrahedralize
from unbend.errors import Disconnected, EmptyMask
from unbend.tetmesh import export_mesh_ascii, solve_graph_laplacian


def mask_of(coords, dims):
    bits = np.zeros(dims, dtype=bool)
    for c in coords:
        bits[c] = True
    return OccupancyMask(bits)


def simplex_counts(mesh):
    """Brute-force unique vertex/edge/face/tet counts from the tet list."""
    edges, faces = set(), set()
    for tet in mesh.tets:
        for pair in combinations(sorted(int(i) for i in tet), 2):
            edges.add(pair)
        for tri in combinations(sorted(int(i) for i in tet), 3):
            faces.add(tri)
    return mesh.n_vertices, len(edges), len(faces), len(mesh.tets)


def face_incidence(mesh):
    counts = {}
    for tet in mesh.tets:
        for tri in combinations(sorted(int(i) for i in tet), 3):
            counts[tri] = counts.get(tri, 0) + 1
    return counts


class TestTetrahedralize:
    def test_single_voxel(self):
        mesh = tetrahedralize(mask_of([(0, 0, 0)], (1, 1, 1)), (1, 1, 1), (0, 0, 0))
        assert mesh.n_vertices == 8
        assert len(mesh.tets) == 6

    def test_two_adjacent_voxels_conformal(self):
        mesh = tetrahedralize(
            mask_of([(0, 0, 0), (1, 0, 0)], (2, 1, 1)), (1, 1, 1), (0, 0, 0)
        )
        assert mesh.n_vertices == 12
        assert len(mesh.tets) == 12
        # every face belongs to one or two tets; shared faces to exactly two
        assert set(face_incidence(mesh).values()) <= {1, 2}

    def test_positive_signed_volumes(self):
        mesh = tetrahedralize(
            mask_of([(0, 0, 0), (0, 1, 0)], (1, 2, 1)), (0.7, 1.3, 2.0), (3, -1, 5)
        )
        v = mesh.vertices
        for t in mesh.tets:
            det = np.linalg.det(v[t[1:]] - v[t[0]])
            assert det > 0

    def test_euler_characteristic_ball(self):
        rng = np.random.default_rng(11)
        coords = {(2, 2, 2)}
        while len(coords) < 10:  # random connected 10-voxel blob
            base = list(coords)[rng.integers(len(coords))]
            d = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)][
                rng.integers(6)
            ]
            n = tuple(np.add(base, d))
            if all(0 <= x < 6 for x in n):
                coords.add(n)
        mesh = tetrahedralize(mask_of(sorted(coords), (6, 6, 6)), (1, 1, 1), (0, 0, 0))
        v, e, f, t = simplex_counts(mesh)
        assert v - e + f - t == 1  # genus-0 solid

    def test_interior_faces_shared_by_two(self):
        mesh = tetrahedralize(
            mask_of([(0, 0, 0), (1, 0, 0), (0, 1, 0)], (2, 2, 1)), (1, 1, 1), (0, 0, 0)
        )
        incidence = face_incidence(mesh)
        assert set(incidence.values()) == {1, 2}

    def test_empty_mask(self):
        with pytest.raises(EmptyMask):
            tetrahedralize(OccupancyMask(np.zeros((2, 2, 2), dtype=bool)), (1, 1, 1), (0, 0, 0))

    def test_vertex_positions_on_corner_lattice(self):
        mesh = tetrahedralize(mask_of([(1, 2, 3)], (3, 4, 5)), (2.0, 1.0, 0.5), (10, 0, 0))
        lo = mesh.vertices.min(axis=0)
        hi = mesh.vertices.max(axis=0)
        assert np.allclose(lo, [10 + (1 - 0.5) * 2, (2 - 0.5) * 1, (3 - 0.5) * 0.5])
        assert np.allclose(hi - lo, [2.0, 1.0, 0.5])


def path_adjacency(n):
    rows = np.arange(n - 1)
    cols = rows + 1
    a = sparse.coo_matrix((np.ones(n - 1), (rows, cols)), shape=(n, n))
    return (a + a.T).tocsr()


class TestSolveHarmonic:
    def test_path_graph_values(self):
        u = solve_graph_laplacian(path_adjacency(3), [0, 2], [1.0, -1.0])
        assert np.allclose(u, [1.0, 0.0, -1.0], atol=1e-10)

    def test_mirror_antisymmetry(self):
        # note: the cube split itself has a preferred diagonal, so tet
        # meshes are not mirror symmetric; the operator-level property is
        # tested on a grid graph that genuinely maps onto itself
        w, l = 3, 9
        n = w * l
        rows, cols = [], []
        for i in range(w):
            for j in range(l):
                a = i * l + j
                if j + 1 < l:
                    rows.append(a), cols.append(a + 1)
                if i + 1 < w:
                    rows.append(a), cols.append(a + l)
        a = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        adj = (a + a.T).tocsr()
        head, tail = 1 * l + 0, 1 * l + (l - 1)  # middle row ends
        u = solve_graph_laplacian(adj, [head, tail], [1.0, -1.0])
        mirror = np.array([i * l + (l - 1 - j) for i in range(w) for j in range(l)])
        assert np.allclose(u, -u[mirror], atol=1e-6)

    def test_maximum_principle_random_mask(self):
        rng = np.random.default_rng(12)
        bits = rng.random((5, 5, 5)) > 0.5
        bits[2, 2, :] = True
        from unbend import dilate_until_connected

        mask, _ = dilate_until_connected(OccupancyMask(bits))
        mesh = tetrahedralize(mask, (1, 1, 1), (0, 0, 0))
        head, tail = 0, mesh.n_vertices - 1
        field = solve_harmonic(mesh, head, tail)
        u = field.values
        assert np.argmax(u) == head and np.argmin(u) == tail
        interior = np.delete(u, [head, tail])
        assert interior.max() < 1.0 and interior.min() > -1.0

    def test_swap_negates(self):
        bits = np.ones((2, 2, 4), dtype=bool)
        mesh = tetrahedralize(OccupancyMask(bits), (1, 1, 1), (0, 0, 0))
        a = solve_harmonic(mesh, 0, mesh.n_vertices - 1)
        b = solve_harmonic(mesh, mesh.n_vertices - 1, 0)
        assert np.allclose(a.values, -b.values, atol=1e-8)

    def test_residual_small(self):
        bits = np.ones((3, 3, 6), dtype=bool)
        mesh = tetrahedralize(OccupancyMask(bits), (1, 1, 1), (0, 0, 0))
        head, tail = 0, mesh.n_vertices - 1
        u = solve_harmonic(mesh, head, tail).values
        deg = np.asarray(mesh.adjacency.sum(axis=1)).ravel()
        lap = sparse.diags(deg) - mesh.adjacency.astype(float)
        free = np.ones(mesh.n_vertices, dtype=bool)
        free[[head, tail]] = False
        r = (lap @ u)[free]
        b = -(lap.tocsr()[free][:, [head, tail]] @ np.array([1.0, -1.0]))
        assert np.linalg.norm(r) <= 1e-8 * np.linalg.norm(b) + 1e-14

    def test_disconnected_raises(self):
        a = sparse.block_diag([path_adjacency(3), path_adjacency(3)]).tocsr()
        with pytest.raises(Disconnected):
            solve_graph_laplacian(a, [0, 5], [1.0, -1.0])

    def test_head_equals_tail_rejected(self):
        bits = np.ones((2, 2, 2), dtype=bool)
        mesh = tetrahedralize(OccupancyMask(bits), (1, 1, 1), (0, 0, 0))
        with pytest.raises(ValueError):
            solve_harmonic(mesh, 1, 1)


def test_mesh_ascii_export(tmp_path):
    bits = np.ones((1, 1, 2), dtype=bool)
    mesh = tetrahedralize(OccupancyMask(bits), (1, 1, 1), (0, 0, 0))
    field = solve_harmonic(mesh, 0, mesh.n_vertices - 1)
    out = tmp_path / "mesh.txt"
    export_mesh_ascii(mesh, field, out)
    lines = out.read_text().splitlines()
    assert sum(1 for ln in lines if ln.startswith("v ")) == mesh.n_vertices
    assert sum(1 for ln in lines if ln.startswith("t ")) == len(mesh.tets)
