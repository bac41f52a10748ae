import numpy as np
import pytest

from ddelastic.assembly import SolverConfig
from ddelastic.experiments import (
    ConvergenceGrid,
    benchmark_dataset,
    convergence_grid,
    load_steps,
    polygon_area,
    relative_l2_error,
    rope_phase_ranges,
    run_bar_benchmark,
    run_rope,
    synthetic_rope_columns,
    volume_objective_mpa,
)
from ddelastic.dataset import check_consistency, split_subsets, Dataset
from ddelastic.structure import BenchmarkSpec, manufactured_displacement


def test_load_steps():
    assert load_steps(4) == (0.25, 0.5, 0.75, 1.0)
    assert load_steps(1, 3.0) == (3.0,)
    with pytest.raises(ValueError):
        load_steps(0)


def test_benchmark_dataset_covers_reference_strains(bench1):
    ds = benchmark_dataset(bench1, 65)
    assert len(ds) == 65
    assert ds.strains.max() == pytest.approx(1.5 * bench1.max_strain())


def test_l2_error_of_exact_nodal_values_is_small(bench0):
    st = bench0.structure(64)
    u = manufactured_displacement(st.nodes[:, 0], bench0)
    assert relative_l2_error(st, u, bench0) < 1e-3
    assert relative_l2_error(st, np.zeros_like(u), bench0) == pytest.approx(1.0)


def test_linear_benchmark_solvers_agree():
    recs = run_bar_benchmark(alpha=0)
    adm, go = recs["adm"].final, recs["go_adm"].final
    np.testing.assert_array_equal(adm.assignment, go.assignment)
    assert adm.objective == go.objective
    assert volume_objective_mpa(adm.objective, BenchmarkSpec().area) == pytest.approx(0.004273811625683564, rel=1e-9)


def test_nonlinear_single_step_values():
    recs = run_bar_benchmark(alpha=1)
    area = BenchmarkSpec().area
    assert volume_objective_mpa(recs["adm"].final.objective, area) == pytest.approx(0.03884170389675866, rel=1e-9)
    assert volume_objective_mpa(recs["go_adm"].final.objective, area) == pytest.approx(0.007188298872033196, rel=1e-9)


def test_small_convergence_grid_shape_and_errors():
    g = convergence_grid(n_elements=(8, 16), n_points=(17, 33), alpha=0)
    assert g.errors.shape == (2, 2)
    assert all(s == "ok" for s in g.status)
    assert np.all((g.errors > 0) & (g.errors < 1))
    lf = g.long_form()
    assert lf["n_elements"].tolist() == [8, 8, 16, 16]


def test_grid_helpers():
    g = ConvergenceGrid([1, 2], [3, 5], np.array([[4.0, 2.0], [3.0, 2.5]]), np.zeros((2, 2)), [], 0, "adm")
    assert g.increases() == [(0, 0, 1, 2.0, 2.5)]
    assert g.column_variation(5) == pytest.approx(0.2)


def test_polygon_area_unit_square():
    assert polygon_area([0, 1, 1, 0], [0, 0, 1, 1]) == pytest.approx(1.0)
    assert polygon_area([0, 1, 2], [0, 1, 2]) == 0.0


def test_synthetic_rope_branches_are_consistent():
    cols = synthetic_rope_columns()
    ranges = rope_phase_ranges()
    assert ranges[-1][1] == len(cols["force"])
    full = Dataset(cols["strain"], cols["force"])
    for sub in split_subsets(full, ranges, add_origin=[True, False, False]):
        assert check_consistency(sub).consistent
    # residual strain after unloading
    assert cols["strain"][ranges[1][1] - 1] > 0


def test_rope_loop_is_closed_and_positive():
    res = run_rope(synthetic_rope_columns(), rope_phase_ranges(), steps_per_phase=12)
    assert res.ok
    assert [p.warm_started for p in res.phases] == [False, True, True]
    assert all(p.data_consistent and p.results_consistent for p in res.phases)
    assert res.loop_area() > 0
    d, f, k = res.load_deflection()
    assert d.shape == f.shape == k.shape


def test_rope_rejects_inconsistent_branch():
    cols = synthetic_rope_columns()
    cols["strain"] = cols["strain"].copy()
    cols["strain"][5], cols["strain"][6] = cols["strain"][6] * 1.5, cols["strain"][5]
    with pytest.raises(ValueError):
        run_rope(cols, rope_phase_ranges(), steps_per_phase=5)
