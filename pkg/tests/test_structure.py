import json

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as hs

from ddelastic.cli import data_path
from ddelastic.structure import (
    BenchmarkSpec,
    StructureError,
    build_bar,
    build_truss,
    load_structure,
    manufactured_bar_load,
    manufactured_displacement,
    simplified_truss,
    structure_from_dict,
    structure_to_dict,
)
from ddelastic.solvers import equilibrium_operator


def test_benchmark_bar_mesh():
    st = build_bar(np.pi, 8, np.pi * 0.02**2, "both")
    assert st.n_nodes == 9 and st.n_elements == 8
    np.testing.assert_allclose(st.lengths, np.pi / 8, rtol=1e-15)
    assert st.areas[0] == pytest.approx(np.pi * 4e-4)
    assert st.n_free == 7


def test_single_element_bar():
    st = build_bar(1.0, 1, 1.0, "left", tip_load=3.0)
    assert st.n_nodes == 2
    assert st.lengths.tolist() == [1.0]
    assert st.load_vector().tolist() == [0.0, 3.0]


def test_rope_mesh():
    st = build_bar(np.pi, 16, 1.0, "left", tip_load=1.0)
    assert st.n_elements == 16


def test_bar_rejects_bad_input():
    with pytest.raises(StructureError):
        build_bar(1.0, 0, 1.0)
    with pytest.raises(StructureError):
        build_bar(1.0, 2, 1.0, "both", tip_load=1.0)
    with pytest.raises(StructureError):
        build_bar(1.0, 2, -1.0)


def test_unsupported_bar_is_a_mechanism():
    with pytest.raises(StructureError):
        build_truss([(0.0,), (1.0,)], [(0, 1)], {0: (False,)})


def test_simplified_truss_layout():
    st = simplified_truss(gamma=2.0)
    assert st.dim == 2 and st.n_elements == 2 and st.n_free == 2
    np.testing.assert_array_equal(st.load_vector()[st.free_dofs], [0.0, -800.0])
    np.testing.assert_allclose(np.linalg.norm(st.tangents, axis=1), 1.0)


def test_symmetric_v_truss_member_forces():
    st = build_truss([(-1.0, 1.0), (1.0, 1.0), (0.0, 0.0)], [(0, 2), (1, 2)],
                     {0: (True, True), 1: (True, True)}, {2: (0.0, -10.0)}, 0.5)
    H = equilibrium_operator(st)
    s = np.linalg.solve(H, st.load_vector()[st.free_dofs])
    # hand statics: 2 N cos45 = 10 N with both members of the hanging V in tension
    N = 10.0 / (2 * np.cos(np.pi / 4))
    np.testing.assert_allclose(s * 0.5, [N, N], rtol=1e-12)


def test_truss_rejects_bad_connectivity():
    nodes = [(0, 0), (1, 0), (0, 1)]
    with pytest.raises(StructureError):
        build_truss(nodes, [(0, 1), (1, 0), (1, 2)], {0: (True, True)})
    with pytest.raises(StructureError):
        build_truss(nodes, [(0, 1)], {0: (True, True)})
    with pytest.raises(StructureError):
        build_truss(nodes, [(0, 1), (1, 2)], {})
    with pytest.raises(StructureError):
        build_truss(nodes, [(0, 0), (1, 2)], {0: (True, True)})


def test_shipped_truss_config_round_trip():
    st = load_structure(data_path("cantilever_truss.json"))
    assert st.dim == 2 and st.n_elements == 8
    np.testing.assert_allclose(st.areas, 0.002)
    assert np.count_nonzero(st.load_vector()) == 2
    assert np.all(st.load_vector()[st.load_vector() != 0] == -400.0)
    again = structure_from_dict(json.loads(json.dumps(structure_to_dict(st))))
    np.testing.assert_array_equal(again.nodes, st.nodes)
    np.testing.assert_array_equal(again.elements, st.elements)
    np.testing.assert_array_equal(again.fixed_dofs, st.fixed_dofs)
    np.testing.assert_array_equal(again.load_vector(), st.load_vector())


@given(hs.lists(hs.tuples(hs.floats(-10, 10), hs.floats(-10, 10)), min_size=3, max_size=3, unique=True))
def test_lengths_match_coordinates(pts):
    X = np.asarray(pts)
    if min(np.linalg.norm(X[i] - X[j]) for i, j in [(0, 2), (1, 2)]) < 1e-3:
        return
    # skip collinear layouts, which are mechanisms
    a, b = X[2] - X[0], X[2] - X[1]
    if abs(a[0] * b[1] - a[1] * b[0]) < 1e-3:
        return
    st = build_truss(X, [(0, 2), (1, 2)], {0: (True, True), 1: (True, True)})
    ref = np.linalg.norm(X[[2, 2]] - X[[0, 1]], axis=1)
    np.testing.assert_allclose(st.lengths, ref, rtol=1e-12)


# -- manufactured load ----------------------------------------------------------

def _symbolic_load(spec: BenchmarkSpec, x0: float) -> float:
    x = sp.symbols("x")
    u = spec.beta * sp.sin(sp.pi * x / spec.L0)
    du = sp.diff(u, x)
    eps = du + sp.Rational(1, 2) * spec.alpha * du**2
    # axial force N = A E eps; equilibrium of the deformed bar: -(N (1 + alpha u'))' = f
    f = -sp.diff(spec.area * spec.E * eps * (1 + spec.alpha * du), x)
    return float(f.subs(x, x0).evalf(30))


@pytest.mark.parametrize("alpha", [0, 1])
@pytest.mark.parametrize("frac", [0.25, 0.1, 0.7])
def test_manufactured_load_matches_symbolic_derivative(alpha, frac):
    spec = BenchmarkSpec(alpha=alpha)
    x0 = frac * spec.L0
    assert manufactured_bar_load(x0, spec) == pytest.approx(_symbolic_load(spec, x0), rel=1e-12)


def test_manufactured_load_at_special_points():
    s0, s1 = BenchmarkSpec(alpha=0), BenchmarkSpec(alpha=1)
    assert manufactured_bar_load(0.0, s0) == pytest.approx(0.0, abs=1e-6)
    mid = s0.L0 / 2
    assert manufactured_bar_load(mid, s1) == pytest.approx(manufactured_bar_load(mid, s0), rel=1e-14)


def test_manufactured_load_mirror_linear():
    s = BenchmarkSpec(alpha=0)
    x = np.linspace(0, s.L0, 13)
    np.testing.assert_array_equal(manufactured_bar_load(x, s.mirrored()), -manufactured_bar_load(x, s))
    np.testing.assert_array_equal(manufactured_displacement(x, s.mirrored()), -manufactured_displacement(x, s))


def test_benchmark_max_strain():
    s = BenchmarkSpec(alpha=1)
    k = 0.15 * np.pi
    assert s.max_strain() == pytest.approx(k + 0.5 * k * k)


def test_distributed_load_sums_to_total_force():
    # constant 3 N/m on a bar of length 2 integrates to 6 N split over the nodes
    st = build_bar(2.0, 4, 1.0, "left", distributed_load=lambda x: 3.0 + 0 * x)
    assert st.load_vector().sum() == pytest.approx(6.0)
