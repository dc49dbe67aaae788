import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_align

from mflstm.alignment import (
    HorizonSpec,
    LagSpec,
    design_to_tensor,
    frequency_align,
    sample_align,
    write_design_csv,
)
from mflstm.errors import AlignmentError, MultipleMismatchError, ShapeError
from mflstm.series import MixedFrequencyDataset, Series


def _single(x, n, m=3, y=None):
    y = np.arange(1.0, n + 1) if y is None else y
    return MixedFrequencyDataset(Series("y", y), (Series("x", np.asarray(x, float), m),))


def test_lagspec_parsing():
    assert LagSpec.parse("0:2") == LagSpec(0, 2)
    assert LagSpec.parse(4) == LagSpec(0, 4)
    assert LagSpec.parse((1, 3)).width == 3
    with pytest.raises(ValueError):
        LagSpec(3, 1)


def test_horizon_from_high_frequency_quarterly_monthly():
    ds = _single(np.zeros(12), 4)
    got = [HorizonSpec.from_high_frequency(h, ds).ar_step for h in (1, 2, 3, 6, 9, 12)]
    assert got == [1, 1, 1, 2, 3, 4]
    spec = HorizonSpec.from_high_frequency(1, ds)
    assert spec.leading_index("x", 3) == 2
    assert HorizonSpec.from_high_frequency(3, ds).leading_index("x", 3) == 0


def test_frequency_align_matrix_form():
    x = np.arange(1.0, 10.0)  # x_1..x_9
    ad = frequency_align(_single(x, 3), LagSpec(0, 2), 0)
    np.testing.assert_array_equal(ad.X[1], [6.0, 5.0, 4.0])
    assert ad.columns == (("x", 0), ("x", 1), ("x", 2))


def test_frequency_align_lag_beyond_sample_marks_row_invalid():
    x = np.arange(1.0, 10.0)
    ad = frequency_align(_single(x, 3), LagSpec(0, 4), 0)
    assert ad.valid.tolist() == [False, True, True]
    np.testing.assert_array_equal(ad.X[1], [6.0, 5.0, 4.0, 3.0, 2.0])


def test_frequency_align_contemporaneous_only():
    ad = frequency_align(_single([10, 20, 30, 40, 50, 60], 2), LagSpec(0, 0), 0)
    np.testing.assert_array_equal(ad.X, [[30.0], [60.0]])


def test_frequency_align_ar_block_last_and_timed():
    ds = _single(np.arange(1.0, 13.0), 4, y=np.array([10.0, 20.0, 30.0, 40.0]))
    ad = frequency_align(ds, LagSpec(0, 0), 1, ar_lags=LagSpec(0, 1))
    assert ad.columns[-2:] == (("y", 0), ("y", 1))
    assert ad.ar_id == "y"
    # h_m = 1 -> AR step 1: row t=3 holds y_2, y_1
    np.testing.assert_array_equal(ad.X[2], [8.0, 20.0, 10.0])


def test_frequency_align_no_feasible_rows():
    with pytest.raises(AlignmentError):
        frequency_align(_single(np.arange(6.0), 2), LagSpec(0, 8), 0)


def test_frequency_align_rejects_invalid_dataset():
    with pytest.raises(ShapeError):
        frequency_align(_single(np.arange(5.0), 2), LagSpec(0, 0), 0)


def test_shift_property():
    rs = np.random.default_rng(3)
    ds = _single(rs.standard_normal(60), 20)
    a = frequency_align(ds, LagSpec(0, 2), 0)
    b = frequency_align(ds, LagSpec(0, 2), 1)
    both = a.valid & b.valid
    # block at h_m=1 equals the block at h_m=0 moved one index back
    np.testing.assert_array_equal(b.X[both][:, :2], a.X[both][:, 1:])


def test_select_keeps_listed_blocks():
    ds = MixedFrequencyDataset(Series("y", np.ones(5)), (Series("a", np.arange(15.0), 3),
                                                        Series("b", np.arange(15.0), 3)))
    ad = frequency_align(ds, {"a": "0:1", "b": "0:0"}, 0, ar_lags="0:0")
    sub = ad.select(["b", "y"])
    assert sub.columns == (("b", 0), ("y", 0))
    assert sub.covariate_ids == ["b"]


@st.composite
def _random_dataset(draw):
    n = draw(st.integers(1, 40))
    K = draw(st.integers(1, 3))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    rs = np.random.default_rng(seed)
    covs, lags = [], {}
    for k in range(K):
        m = draw(st.integers(1, 6))
        vals = rs.standard_normal(m * n)
        mask = rs.random(m * n) < 0.05
        covs.append(Series(f"x{k}", vals, m, mask))
        if draw(st.booleans()) or k == 0:
            lo = draw(st.integers(0, 3))
            lags[f"x{k}"] = (lo, lo + draw(st.integers(0, 5)))
    y = rs.standard_normal(n)
    ds = MixedFrequencyDataset(Series("y", y, 1, rs.random(n) < 0.05), tuple(covs))
    ar = None
    if draw(st.booleans()):
        lo = draw(st.integers(0, 2))
        ar = (lo, lo + draw(st.integers(0, 2)))
    return ds, lags, draw(st.integers(0, 12)), ar


@settings(max_examples=150, deadline=None)
@given(_random_dataset())
def test_frequency_align_matches_brute_force(case):
    ds, lags, h_m, ar = case
    X, valid, y = brute_force_align(ds, lags, h_m, ar)
    if not valid.any():
        with pytest.raises(AlignmentError):
            frequency_align(ds, {k: LagSpec(*v) for k, v in lags.items()}, h_m,
                            None if ar is None else LagSpec(*ar))
        return
    ad = frequency_align(ds, {k: LagSpec(*v) for k, v in lags.items()}, h_m,
                         None if ar is None else LagSpec(*ar))
    np.testing.assert_array_equal(ad.X, X)
    np.testing.assert_array_equal(ad.valid, valid)
    np.testing.assert_array_equal(ad.y, y)


def test_sample_align_first_sequence():
    x = np.arange(1.0, 13.0)
    batch = sample_align(_single(x, 4), 5)
    assert batch.t[0] == 2
    np.testing.assert_array_equal(batch.X[0, :, 0], [2.0, 3.0, 4.0, 5.0, 6.0])


def test_sample_align_identity_for_single_frequency():
    rs = np.random.default_rng(0)
    x = rs.standard_normal((6, 2))
    ds = MixedFrequencyDataset(Series("y", np.ones(6)), (Series("a", x[:, 0]), Series("b", x[:, 1])))
    batch = sample_align(ds, 1)
    np.testing.assert_array_equal(batch.X[:, 0, :], x)


def test_sample_align_counts_feasible_sequences():
    batch = sample_align(_single(np.arange(12.0), 4), 6)
    assert batch.t.tolist() == [2, 3, 4]


def test_sample_align_within_rate_and_horizon():
    x = np.arange(1.0, 19.0)
    batch = sample_align(_single(x, 6), 3, h_m=1, within_rate=3)
    # target t=3 ends at 9 - 1 = 8, stepping back 3
    i = batch.t.tolist().index(3)
    np.testing.assert_array_equal(batch.X[i, :, 0], [2.0, 5.0, 8.0])


def test_sample_align_rejects_multiple_ratios():
    ds = MixedFrequencyDataset(Series("y", np.ones(4)), (Series("a", np.ones(12), 3), Series("b", np.ones(4))))
    with pytest.raises(MultipleMismatchError):
        sample_align(ds, 2)


def test_sample_align_all_skipped():
    with pytest.raises(AlignmentError):
        sample_align(_single(np.arange(6.0), 2), 10)


def test_sample_and_frequency_alignment_share_information():
    rs = np.random.default_rng(5)
    ds = _single(rs.standard_normal(30), 10)
    ts = 4
    batch = sample_align(ds, ts, h_m=1)
    ad = frequency_align(ds, LagSpec(0, ts - 1), 1)
    for seq, t in zip(batch.X, batch.t):
        row = ad.X[ad.row_of(t)]
        assert sorted(seq[:, 0]) == sorted(row)


def test_design_to_tensor_two_timesteps():
    rs = np.random.default_rng(1)
    ds = MixedFrequencyDataset(Series("y", np.arange(4.0)),
                               (Series("a", rs.standard_normal(12), 3), Series("b", rs.standard_normal(12), 3)))
    ad = frequency_align(ds, LagSpec(0, 4), 0)
    batch = design_to_tensor(ad, 2)
    assert batch.t[0] == 3
    np.testing.assert_array_equal(batch.X[0], ad.X[1:3])
    assert batch.n_features == 10


def test_design_to_tensor_unit_timestep_is_identity():
    rs = np.random.default_rng(2)
    ds = _single(rs.standard_normal(30), 10)
    ad = frequency_align(ds, LagSpec(0, 4), 0)
    batch = design_to_tensor(ad, 1)
    np.testing.assert_array_equal(batch.X[:, 0, :], ad.X[ad.valid])


def test_design_to_tensor_window_count():
    ds = _single(np.arange(1.0, 16.0), 5)
    ad = frequency_align(ds, LagSpec(0, 0), 0)
    assert len(design_to_tensor(ad, 3)) == 3
    with pytest.raises(AlignmentError):
        design_to_tensor(ad, 6)


def test_design_csv(tmp_path):
    ad = frequency_align(_single(np.arange(1.0, 10.0), 3), LagSpec(0, 4), 0)
    lines = write_design_csv(ad, tmp_path / "d.csv").read_text().splitlines()
    assert lines[0] == "t,x_lag0,x_lag1,x_lag2,x_lag3,x_lag4,y,valid"
    assert lines[1].endswith(",0") and lines[2].endswith(",1")
