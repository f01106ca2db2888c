import numpy as np
import pytest

from infoveil.errors import EmptyPanel, InvariantViolation
from infoveil.rsv import RawSharePanel, ShareAxis, ShareEntry, quantize_rsv, round_half_away


def panel(counts, totals, axis=ShareAxis.GEO_WITHIN_WINDOW):
    entries = tuple(ShareEntry(i, c, t) for i, (c, t) in enumerate(zip(counts, totals)))
    return RawSharePanel(axis, entries)


def values(quantized):
    return [v for _, v in quantized]


def test_proportional_scaling():
    assert values(quantize_rsv(panel([1, 2, 4], [10, 10, 10]))) == [25, 50, 100]


def test_all_equal_shares_are_all_100():
    assert values(quantize_rsv(panel([5, 5, 5], [100, 100, 100]))) == [100, 100, 100]


def test_totals_matter_not_raw_counts():
    # counts [3,1] with totals [300,50]: shares 0.01 vs 0.02
    assert values(quantize_rsv(panel([3, 1], [300, 50]))) == [50, 100]


def test_all_zero_counts_stay_zero():
    assert values(quantize_rsv(panel([0, 0], [10, 20]))) == [0, 0]


def test_empty_panel_rejected():
    with pytest.raises(EmptyPanel):
        quantize_rsv(RawSharePanel(ShareAxis.TIME_WITHIN_GEO, ()))


def test_nonpositive_total_rejected():
    with pytest.raises(InvariantViolation):
        ShareEntry("x", 1, 0)


def test_duplicate_keys_rejected():
    with pytest.raises(InvariantViolation):
        RawSharePanel(ShareAxis.TIME_WITHIN_GEO,
                      (ShareEntry("a", 1, 2), ShareEntry("a", 2, 4)))


def test_rounding_is_half_away_from_zero():
    assert round_half_away(0.5) == 1
    assert round_half_away(1.5) == 2
    assert round_half_away(2.5) == 3
    assert round_half_away(2.4999) == 2
    assert round_half_away(-0.5) == -1


def test_max_share_ties_all_map_to_100():
    assert values(quantize_rsv(panel([2, 4], [100, 200]))) == [100, 100]


@pytest.mark.parametrize("seed", range(20))
def test_scale_invariance_and_bounds(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 40))
    counts = rng.uniform(0, 1000, n)
    totals = rng.uniform(1000, 100000, n)
    base = quantize_rsv(panel(counts, totals))
    scaled = quantize_rsv(panel(counts * 7.5, totals * 7.5))
    assert base == scaled
    vals = values(base)
    assert all(0 <= v <= 100 for v in vals)
    assert max(vals) == 100
    # ranking by RSV matches ranking by share
    shares = counts / totals
    order_by_share = sorted(range(n), key=lambda i: shares[i])
    rsv_in_share_order = [vals[i] for i in order_by_share]
    assert rsv_in_share_order == sorted(rsv_in_share_order)
