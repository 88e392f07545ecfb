import math
from itertools import combinations

import numpy as np
import pytest

from torsionscope import PointCloud, SimplexCapExceeded, build_rips
from torsionscope.rips import (
    Filtration,
    Simplex,
    boundary_matrix,
    codim1_faces,
    dump_filtration,
    sublevel_restriction,
)
from torsionscope import generate_random_cloud


def equilateral_triangle():
    return PointCloud(np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]]))


def unit_square():
    return PointCloud(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))


def test_three_points_complete_complex():
    # explicit radius: the corner coordinates are irrational, so AUTO's
    # enclosing radius can land an ulp below an edge birth
    f = build_rips(equilateral_triangle(), max_dim=2, max_radius=1.5)
    assert len(f) == 7
    by_dim = {d: [s for s in f.simplices if s.dim == d] for d in range(3)}
    assert len(by_dim[0]) == 3 and len(by_dim[1]) == 3 and len(by_dim[2]) == 1
    for e in by_dim[1]:
        assert e.birth == pytest.approx(1.0, abs=1e-12)
    assert by_dim[2][0].birth == pytest.approx(1.0, abs=1e-12)


def test_collinear_radius_cap():
    pts = PointCloud(np.array([[float(i), 0.0] for i in range(4)]))
    f = build_rips(pts, max_dim=1, max_radius=1.5)
    assert len(f) == 7  # 4 vertices + 3 adjacent edges
    assert all(s.dim <= 1 for s in f.simplices)


def test_unit_square_auto_radius():
    f = build_rips(unit_square(), max_dim=2)
    edges = sorted(s.birth for s in f.simplices if s.dim == 1)
    assert edges[:4] == pytest.approx([1.0] * 4, abs=1e-12)
    assert edges[4:] == pytest.approx([math.sqrt(2)] * 2, abs=1e-12)
    assert sum(1 for s in f.simplices if s.dim == 2) == 4


def test_filtration_order_and_face_presence():
    f = build_rips(generate_random_cloud(10, 3, seed=3), max_dim=2)
    keys = [(s.birth, s.dim, s.vertices) for s in f.simplices]
    assert keys == sorted(keys)
    for j, s in enumerate(f.simplices):
        for face in codim1_faces(s.vertices):
            assert f.index_of[face] < j


def test_birth_equals_diameter():
    checked = 0
    for seed in range(5):
        cloud = generate_random_cloud(9, 3, seed=seed)
        f = build_rips(cloud, max_dim=3, max_radius=math.inf)
        for s in f.simplices:
            if s.dim == 0:
                assert s.birth == 0.0
                continue
            diam = max(
                math.dist(cloud.points[u], cloud.points[v])
                for u, v in combinations(s.vertices, 2)
            )
            assert abs(s.birth - diam) <= 1e-12
            checked += 1
    assert checked >= 1000


def test_sublevel_monotone():
    f = build_rips(generate_random_cloud(8, 2, seed=11), max_dim=2)
    radii = np.linspace(0.0, float(f.births.max()) + 0.1, 25)
    counts = [len(sublevel_restriction(f, r)) for r in radii]
    assert counts == sorted(counts)
    assert len(sublevel_restriction(f, 0.0)) == 8  # vertices only
    assert len(sublevel_restriction(f, math.inf)) == len(f)


def test_boundary_single_edge_and_triangle():
    f = build_rips(equilateral_triangle(), max_dim=2, max_radius=1.5)
    bm = boundary_matrix(f)
    edge_cols = [bm.columns[j] for j in range(len(f)) if f.simplices[j].dim == 1]
    for col in edge_cols:
        rows = [r for r, _ in col]
        coeffs = [c for _, c in col]
        assert sorted(coeffs) == [-1, 1]
        # +1 on the face omitting the first vertex (the larger-index vertex row)
        assert coeffs[rows.index(max(rows))] == 1
        assert coeffs[rows.index(min(rows))] == -1
    tri_col = next(bm.columns[j] for j in range(len(f)) if f.simplices[j].dim == 2)
    assert [c for _, c in tri_col] == [1, -1, 1] or sorted(
        c for _, c in tri_col
    ) == [-1, 1, 1]


def test_boundary_signs_in_omission_order():
    # signs alternate by omitted-vertex position: (+1, -1, +1, ...)
    f = build_rips(generate_random_cloud(6, 3, seed=5), max_dim=3)
    for j, s in enumerate(f.simplices):
        if s.dim < 1:
            continue
        col = dict()
        for omit, face in enumerate(codim1_faces(s.vertices)):
            col[f.index_of[face]] = 1 if omit % 2 == 0 else -1
        built = dict(boundary_matrix(f).columns[j])
        assert built == col


def test_boundary_squares_to_zero():
    for seed in (0, 7):
        f = build_rips(generate_random_cloud(8, 3, seed=seed), max_dim=3)
        assert len(f) <= 500
        bm = boundary_matrix(f)
        cols = [dict(c) for c in bm.columns]
        for j, col in enumerate(cols):
            if f.simplices[j].dim < 2:
                continue
            acc = {}
            for r, c in col.items():
                for r2, c2 in cols[r].items():
                    acc[r2] = acc.get(r2, 0) + c * c2
            assert all(v == 0 for v in acc.values()), f"d^2 != 0 at column {j}"


def test_column_entry_count_matches_dim():
    f = build_rips(generate_random_cloud(7, 4, seed=2), max_dim=3)
    bm = boundary_matrix(f)
    for j, col in enumerate(bm.columns):
        p = f.simplices[j].dim
        assert len(col) == (p + 1 if p >= 1 else 0)
        assert all(r < j for r, _ in col)


def test_simplex_cap_guard():
    cloud = generate_random_cloud(30, 2, seed=0)
    with pytest.raises(SimplexCapExceeded) as exc:
        build_rips(cloud, max_dim=3, simplex_cap=100)
    assert "100" in str(exc.value)


def test_dump_format():
    f = build_rips(equilateral_triangle(), max_dim=2, max_radius=1.5)
    lines = dump_filtration(f).splitlines()
    assert len(lines) == 7
    first = lines[0].split()
    assert float(first[0]) == 0.0 and first[1] == "0"
    last = lines[-1].split()
    assert last[1] == "2" and last[2:] == ["0", "1", "2"]


def test_from_simplices_validation():
    with pytest.raises(ValueError):
        # edge before its vertices exist
        Filtration.from_simplices([(0.0, (0, 1))])
    with pytest.raises(ValueError):
        # face born after the coface
        Filtration.from_simplices([(0.0, (0,)), (0.0, (1,)), (1.0, (0, 1)), (0.5, (0, 1, 2))])


def test_simplex_invariants():
    with pytest.raises(ValueError):
        Simplex((1, 0), 0.0)  # not increasing
    with pytest.raises(ValueError):
        Simplex((0, 1), -1.0)  # negative birth
    s = Simplex((2, 5, 9), 1.5)
    assert s.dim == 2


def test_prefix_size_matches_sublevel():
    f = build_rips(generate_random_cloud(9, 2, seed=21), max_dim=2)
    for r in np.unique(f.births):
        assert f.prefix_size(float(r)) == len(sublevel_restriction(f, float(r)))
