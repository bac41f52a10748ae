import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as hs

from ddelastic.dataset import (
    Dataset,
    DatasetError,
    add_noise,
    check_consistency,
    generate_linear,
    generate_sigmoid,
    load_csv,
    make_unsymmetric,
    repair_noisy,
    sigmoid_law,
    split_subsets,
)


def test_linear_three_points():
    d = generate_linear(70e9, 3, 0.1)
    assert d.strains.tolist() == [-0.1, 0.0, 0.1]
    assert d.stresses.tolist() == [-7e9, 0.0, 7e9]


def test_linear_unit_slope():
    d = generate_linear(1.0, 5, 1.0)
    np.testing.assert_array_equal(d.strains, [-1, -0.5, 0, 0.5, 1])
    np.testing.assert_array_equal(d.stresses, d.strains)


def test_linear_rejects_even_count():
    with pytest.raises(DatasetError):
        generate_linear(1.0, 4, 1.0)
    with pytest.raises(DatasetError):
        generate_linear(1.0, 1, 1.0)


def test_benchmark_sized_dataset():
    d = generate_linear(70e9, 65, 0.3)
    assert len(d) == 65
    assert d.index_of(0.0, 0.0) == 32
    assert d.is_mirror_symmetric()


def test_sigmoid_values():
    assert sigmoid_law(0.0, 5.0) == 0.0
    assert sigmoid_law(np.log(3.0), 2.0) == pytest.approx(1.0, rel=1e-15)
    assert sigmoid_law(50.0, 3.0) == pytest.approx(3.0, rel=1e-15)


@given(n=hs.integers(1, 60).map(lambda k: 2 * k + 1),
       emax=hs.floats(1e-4, 10.0),
       scale=hs.floats(1e-3, 1e11))
def test_generators_are_symmetric_and_consistent(n, emax, scale):
    for d in (generate_linear(scale, n, emax), generate_sigmoid(scale, n, emax)):
        assert len(d) == n
        assert d.index_of(0.0, 0.0) is not None
        # exact negation, not approximate
        np.testing.assert_array_equal(d.strains[::-1], -d.strains)
        np.testing.assert_array_equal(d.stresses[::-1], -d.stresses)
        assert check_consistency(d).consistent


def test_unsymmetric_split_counts():
    d = make_unsymmetric("linear", 10, 1.0, 0.8, E=2.0)
    assert np.sum(d.strains >= 0) == 8
    assert np.sum(d.strains < 0) == 2
    assert d.index_of(0.0, 0.0) is not None
    half = make_unsymmetric("linear", 10, 1.0, 0.5, E=2.0)
    assert np.sum(half.strains >= 0) == 5


def test_unsymmetric_sigmoid_87():
    d = make_unsymmetric("sigmoid", 87, 0.2, 0.8, S_max=1e9)
    assert len(d) == 87
    assert np.sum(d.strains >= 0) == round(0.8 * 87)
    assert check_consistency(d).consistent


def test_unsymmetric_rejects_empty_branch():
    with pytest.raises(DatasetError):
        make_unsymmetric("linear", 3, 1.0, 0.99, E=1.0)
    with pytest.raises(DatasetError):
        make_unsymmetric("linear", 10, 1.0, 1.0, E=1.0)


def test_noise_zero_sigma_is_identity():
    d = generate_sigmoid(1e9, 87, 0.2)
    n = add_noise(d, 0.0, seed=1)
    np.testing.assert_array_equal(n.strains, d.strains)
    np.testing.assert_array_equal(n.stresses, d.stresses)


def test_noise_is_reproducible_and_recorded():
    d = generate_sigmoid(1e9, 87, 0.2)
    a, b = add_noise(d, 0.06, 5), add_noise(d, 0.06, 5)
    np.testing.assert_array_equal(a.strains, b.strains)
    np.testing.assert_array_equal(a.stresses, b.stresses)
    assert a.provenance["prng"]
    assert not np.array_equal(add_noise(d, 0.06, 6).strains, a.strains)


def test_noise_statistics_in_normalized_coordinates():
    n = 100_001
    d = generate_linear(1.0, n, 1.0)
    noisy = add_noise(d, 0.06, seed=11)
    # normalized coordinates: the map onto [-1, 1] has half-range 1 here
    for z in (noisy.strains - d.strains, noisy.stresses - d.stresses):
        assert abs(z.std() - 0.06) < 0.002
        assert abs(z.mean()) < 0.002


def test_noise_rejects_negative_sigma():
    with pytest.raises(DatasetError):
        add_noise(generate_linear(1.0, 3, 1.0), -0.1, 0)


def test_consistency_flags_decreasing_pair():
    d = Dataset.from_points([(0, 0), (0.1, 1.0), (0.2, 0.5)])
    rep = check_consistency(d)
    assert not rep.consistent
    assert [(i, j) for i, j, _ in rep.violations] == [(1, 2)]
    assert rep.violations[0][2] == pytest.approx(0.05)
    assert rep.flagged == {1, 2}


def test_repair_reverts_until_consistent():
    d = generate_sigmoid(1e9, 87, 0.2)
    noisy = add_noise(d, 0.06, seed=7)
    assert not check_consistency(noisy).consistent
    fixed, reverted = repair_noisy(noisy, d)
    assert check_consistency(fixed).consistent
    assert len(set(reverted)) == len(reverted)
    kept = np.setdiff1d(np.arange(len(d)), reverted)
    np.testing.assert_array_equal(fixed.strains[kept], noisy.strains[kept])
    np.testing.assert_array_equal(fixed.strains[reverted], d.strains[reverted])


def test_split_identity_and_concatenation():
    d = Dataset(np.arange(10.0), 2 * np.arange(10.0))
    (whole,) = split_subsets(d, [(0, 10)])
    np.testing.assert_array_equal(whole.as_array(), d.as_array())
    parts = split_subsets(d, [(0, 3), (3, 7), (7, 10)])
    np.testing.assert_array_equal(np.concatenate([p.strains for p in parts]), d.strains)


def test_split_prepends_origin():
    d = Dataset([0.1, 0.2], [1.0, 2.0])
    (p,) = split_subsets(d, [(0, 2)], add_origin=True)
    assert p[0] == (0.0, 0.0)
    assert len(p) == 3


@pytest.mark.parametrize("ranges", [[(0, 11)], [(0, 4), (3, 6)], [(5, 4)]])
def test_split_rejects_bad_ranges(ranges):
    with pytest.raises(DatasetError):
        split_subsets(Dataset(np.arange(10.0), np.arange(10.0)), ranges)


def test_csv_round_trip_and_force_conversion(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("# comment\ntime,force,strain\n0,10,0.001\n1,20,0.002\n", encoding="utf-8")
    d = load_csv(p, force="force", area=2.0)
    np.testing.assert_array_equal(d.stresses, [5.0, 10.0])
    np.testing.assert_array_equal(d.strains, [0.001, 0.002])


@pytest.mark.parametrize("body", ["strain,stress\n0.1,abc\n", "strain,stress\n0.1\n", "a,b\n1,2\n"])
def test_csv_errors(tmp_path, body):
    p = tmp_path / "bad.csv"
    p.write_text(body, encoding="utf-8")
    with pytest.raises(DatasetError):
        load_csv(p)


def test_dataset_is_read_only():
    d = generate_linear(1.0, 3, 1.0)
    with pytest.raises(ValueError):
        d.strains[0] = 5.0


def test_dataset_rejects_non_finite():
    with pytest.raises(DatasetError):
        Dataset([0.0, np.nan], [0.0, 1.0])
