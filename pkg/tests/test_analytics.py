import math
from datetime import date, timedelta

import numpy as np
import pytest

from infoveil.analytics import (
    StatePanel,
    classify_band,
    drop_incomplete_queries,
    interpret_component,
    pca,
    pearson_matrix,
    percent_change,
)
from infoveil.errors import (
    AllQueriesDropped,
    BadIndex,
    ConstantColumn,
    EmptyWindow,
    KTooLarge,
    OutOfRange,
)
from infoveil.series import DateRange

WINDOW = DateRange(date(2020, 3, 1), date(2020, 4, 15))


def make_panel(values, states=None, query_ids=None):
    values = np.asarray(values, dtype=float)
    n, p = values.shape
    states = tuple(states or (f"US-S{i:02d}" for i in range(n)))
    query_ids = tuple(query_ids or (f"q{j}" for j in range(p)))
    return StatePanel(states, query_ids, values, WINDOW)


# --- independent oracles -----------------------------------------------------

def pearson_oracle(xs, ys):
    """Textbook two-pass Pearson in pure python."""
    n = len(xs)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    syy = math.fsum((y - my) ** 2 for y in ys)
    if sxx == 0 or syy == 0:
        return None
    return sxy / math.sqrt(sxx * syy)


def pairwise_pearson_oracle(values):
    """Direct-formula pairwise-complete correlation over a masked matrix."""
    n, p = values.shape
    r = np.full((p, p), np.nan)
    for i in range(p):
        if np.sum(~np.isnan(values[:, i])) >= 2:
            r[i, i] = 1.0
        for j in range(i + 1, p):
            pairs = [(values[s, i], values[s, j]) for s in range(n)
                     if not (np.isnan(values[s, i]) or np.isnan(values[s, j]))]
            if len(pairs) < 2:
                continue
            est = pearson_oracle([a for a, _ in pairs], [b for _, b in pairs])
            if est is not None:
                r[i, j] = r[j, i] = est
    return r


def power_iteration_pca_oracle(values, k, iters=20000):
    """Eigendecomposition by power iteration with deflation on the explicit
    correlation matrix; entirely independent of np.linalg.eigh."""
    z = (values - values.mean(axis=0)) / values.std(axis=0, ddof=1)
    n, p = z.shape
    corr = (z.T @ z) / (n - 1)
    m = min(n - 1, p)
    mat = corr.copy()
    eigvals, eigvecs = [], []
    for _ in range(m):
        vec = np.ones(p) / math.sqrt(p)
        for _ in range(iters):
            nxt = mat @ vec
            norm = np.linalg.norm(nxt)
            if norm == 0:
                break
            nxt = nxt / norm
            if np.linalg.norm(nxt - vec) < 1e-14:
                vec = nxt
                break
            vec = nxt
        lam = float(vec @ mat @ vec)
        eigvals.append(lam)
        eigvecs.append(vec)
        mat = mat - lam * np.outer(vec, vec)
    eigvals = np.array(eigvals)
    eigvecs = np.array(eigvecs).T
    total = eigvals.sum()
    out = []
    for idx in range(k):
        vec = eigvecs[:, idx]
        anchor = int(np.argmax(np.abs(vec)))
        if vec[anchor] < 0:
            vec = -vec
        out.append((vec, eigvals[idx] / total, z @ vec))
    return out


# --- percent change -----------------------------------------------------------

def monthly_points(month_values):
    """Four weekly points in each given (year, month) -> value mapping."""
    pts = []
    for (year, month), value in month_values.items():
        for week in range(4):
            pts.append((date(year, month, 2 + 7 * week), float(value)))
    return pts


class TestPercentChange:
    JAN = DateRange(date(2020, 1, 1), date(2020, 1, 31))
    MAR = DateRange(date(2020, 3, 1), date(2020, 3, 31))

    def test_trebling_is_plus_200(self):
        pts = monthly_points({(2020, 1): 10, (2020, 3): 30})
        assert percent_change(pts, self.JAN, self.MAR).value == pytest.approx(200.0)

    def test_health_insurance_style_decline(self):
        pts = monthly_points({(2020, 1): 100, (2020, 3): 82})
        res = percent_change(pts, self.JAN, self.MAR)
        assert res.value == pytest.approx(-18.0)
        assert not res.capped and not res.zero_baseline

    def test_cap_flags_extreme_growth(self):
        pts = monthly_points({(2020, 1): 1, (2020, 3): 150})
        res = percent_change(pts, self.JAN, self.MAR, cap=10000)
        assert res.value == 10000.0
        assert res.capped

    def test_zero_baseline_is_marker_not_infinity(self):
        pts = monthly_points({(2020, 1): 0, (2020, 3): 80})
        res = percent_change(pts, self.JAN, self.MAR)
        assert res.zero_baseline
        assert res.value is None

    def test_empty_window_rejected(self):
        pts = monthly_points({(2020, 3): 30})
        with pytest.raises(EmptyWindow):
            percent_change(pts, self.JAN, self.MAR)

    def test_scale_invariance(self):
        pts = monthly_points({(2020, 1): 20, (2020, 3): 26})
        scaled = [(d, v * 3.7) for d, v in pts]
        a = percent_change(pts, self.JAN, self.MAR).value
        b = percent_change(scaled, self.JAN, self.MAR).value
        assert a == pytest.approx(b, abs=1e-12)


# --- missing-query elimination -------------------------------------------------

class TestDropIncompleteQueries:
    def test_complete_panel_is_untouched(self):
        panel = make_panel([[1, 2], [3, 4], [5, 6]])
        reduced, dropped = drop_incomplete_queries(panel)
        assert dropped == []
        assert reduced == panel

    def test_single_missing_cell_drops_exactly_that_query(self):
        values = np.array([[1.0, 2.0, 3.0], [4.0, np.nan, 6.0], [7.0, 8.0, 9.0]])
        panel = make_panel(values)
        reduced, dropped = drop_incomplete_queries(panel)
        assert dropped == ["q1"]
        assert reduced.query_ids == ("q0", "q2")
        assert not np.isnan(reduced.values).any()

    def test_dropped_order_follows_panel_order(self):
        values = np.full((2, 4), 5.0)
        values[0, 3] = np.nan
        values[1, 1] = np.nan
        panel = make_panel(values)
        _, dropped = drop_incomplete_queries(panel)
        assert dropped == ["q1", "q3"]

    def test_all_dropped_is_an_error(self):
        values = np.array([[np.nan, 1.0], [2.0, np.nan]])
        with pytest.raises(AllQueriesDropped):
            drop_incomplete_queries(make_panel(values))


# --- pairwise-complete Pearson --------------------------------------------------

class TestPearsonMatrix:
    def test_identical_columns_give_r_1(self):
        col = np.array([3.0, 10.0, 40.0, 80.0])
        panel = make_panel(np.column_stack([col, col]))
        assert pearson_matrix(panel).pair("q0", "q1") == pytest.approx(1.0, abs=1e-12)

    def test_affine_anticorrelation_gives_minus_1(self):
        col = np.array([10.0, 20.0, 50.0, 90.0])
        panel = make_panel(np.column_stack([col, -col + 100.0]))
        assert pearson_matrix(panel).pair("q0", "q1") == pytest.approx(-1.0, abs=1e-12)

    def test_masked_panel_matches_direct_formula_oracle(self):
        rng = np.random.default_rng(3)
        values = rng.integers(0, 101, size=(5, 3)).astype(float)
        values[2, 1] = np.nan
        panel = make_panel(values)
        got = pearson_matrix(panel)
        want = pairwise_pearson_oracle(values)
        assert np.allclose(got.r, want, atol=1e-12, equal_nan=True)

    def test_complete_panel_matches_oracle_everywhere(self):
        rng = np.random.default_rng(17)
        values = rng.uniform(0, 100, size=(12, 6))
        panel = make_panel(values)
        got = pearson_matrix(panel).r
        want = pairwise_pearson_oracle(values)
        assert np.nanmax(np.abs(got - want)) < 1e-12

    def test_constant_column_marked_missing_off_diagonal(self):
        values = np.column_stack([np.full(4, 7.0), np.array([1.0, 2, 3, 4])])
        got = pearson_matrix(make_panel(values))
        assert np.isnan(got.pair("q0", "q1"))
        assert got.pair("q0", "q0") == 1.0  # >=2 present values

    def test_too_few_complete_pairs_marked_missing(self):
        values = np.array([[1.0, np.nan], [2.0, np.nan], [3.0, 5.0]])
        got = pearson_matrix(make_panel(values))
        assert np.isnan(got.pair("q0", "q1"))
        assert got.n_pairs[0, 1] == 1

    def test_symmetry_and_pair_counts(self):
        rng = np.random.default_rng(5)
        values = rng.uniform(0, 100, size=(8, 4))
        values[rng.random(values.shape) < 0.2] = np.nan
        got = pearson_matrix(make_panel(values))
        assert np.allclose(got.r, got.r.T, equal_nan=True)
        assert (got.n_pairs == got.n_pairs.T).all()


class TestClassifyBand:
    @pytest.mark.parametrize("r,band", [
        (0.0, "low"), (0.39999, "low"), (0.4, "moderate"), (0.5, "moderate"),
        (0.59999, "moderate"), (0.6, "high"), (1.0, "high"),
        (-0.7, "high"), (-0.5, "moderate"), (-0.1, "low"),
    ])
    def test_bands(self, r, band):
        assert classify_band(r) == band

    def test_out_of_range_rejected(self):
        with pytest.raises(OutOfRange):
            classify_band(1.5)


# --- PCA -------------------------------------------------------------------------

class TestPca:
    def test_rank_one_structure_explains_everything(self):
        col = np.array([1.0, 5.0, 9.0, 20.0])
        panel = make_panel(np.column_stack([col, 3 * col]))
        res = pca(panel, k=1)
        assert res.components[0].explained_variance_ratio == pytest.approx(1.0, abs=1e-12)

    def test_4x3_fixture_matches_power_iteration_oracle(self):
        values = np.array([
            [10.0, 20.0, 30.0],
            [20.0, 40.0, 35.0],
            [30.0, 35.0, 90.0],
            [40.0, 80.0, 60.0],
        ])
        panel = make_panel(values)
        res = pca(panel, k=3)
        oracle = power_iteration_pca_oracle(values, k=3)
        for comp, (vec, ratio, scores) in zip(res.components, oracle):
            assert np.allclose(comp.loadings, vec, atol=1e-6)
            assert comp.explained_variance_ratio == pytest.approx(ratio, abs=1e-6)
            assert np.allclose(comp.scores, scores, atol=1e-6)

    def test_reconstruction_with_all_components(self):
        rng = np.random.default_rng(23)
        values = rng.uniform(0, 100, size=(10, 4))
        panel = make_panel(values)
        res = pca(panel, k=4)
        z = (values - values.mean(axis=0)) / values.std(axis=0, ddof=1)
        recon = res.score_matrix() @ res.loading_matrix().T
        assert np.abs(recon - z).max() < 1e-6

    def test_reconstruction_when_states_limit_rank(self):
        rng = np.random.default_rng(29)
        values = rng.uniform(0, 100, size=(4, 6))  # rank limited to 3
        panel = make_panel(values)
        res = pca(panel, k=3)
        z = (values - values.mean(axis=0)) / values.std(axis=0, ddof=1)
        recon = res.score_matrix() @ res.loading_matrix().T
        assert np.abs(recon - z).max() < 1e-6

    def test_ratios_sum_to_one_and_are_sorted(self):
        rng = np.random.default_rng(31)
        values = rng.uniform(0, 100, size=(9, 5))
        res = pca(make_panel(values), k=5)
        ratios = [c.explained_variance_ratio for c in res.components]
        assert ratios == sorted(ratios, reverse=True)
        assert math.fsum(ratios) == pytest.approx(1.0, abs=1e-8)

    def test_loadings_are_orthonormal(self):
        rng = np.random.default_rng(37)
        values = rng.uniform(0, 100, size=(12, 5))
        res = pca(make_panel(values), k=5)
        basis = res.loading_matrix()
        assert np.abs(basis.T @ basis - np.eye(5)).max() < 1e-8

    def test_scale_invariance_of_raw_columns(self):
        rng = np.random.default_rng(41)
        values = rng.uniform(1, 99, size=(8, 4))
        scaled = values.copy()
        scaled[:, 2] = np.clip(scaled[:, 2] * 0.5, 0, 100)
        a = pca(make_panel(values), k=3)
        b = pca(make_panel(scaled), k=3)
        for ca, cb in zip(a.components, b.components):
            assert np.allclose(ca.loadings, cb.loadings, atol=1e-9)
            assert ca.explained_variance_ratio == pytest.approx(cb.explained_variance_ratio, abs=1e-9)
            assert np.allclose(ca.scores, cb.scores, atol=1e-9)

    def test_sign_determinism_across_runs(self):
        rng = np.random.default_rng(43)
        values = rng.uniform(0, 100, size=(10, 4))
        a = pca(make_panel(values), k=4)
        b = pca(make_panel(values.copy()), k=4)
        for ca, cb in zip(a.components, b.components):
            assert ca.loadings == cb.loadings
            assert ca.scores == cb.scores

    def test_flipping_a_non_anchor_column_flips_only_its_loading(self):
        # A flip of the anchor column itself re-anchors the orientation rule,
        # so the loading-flip property is asserted for non-anchor columns.
        rng = np.random.default_rng(47)
        values = rng.uniform(10, 90, size=(10, 4))
        base = pca(make_panel(values), k=4)
        for comp_index, comp in enumerate(base.components):
            anchor = int(np.argmax(np.abs(comp.loadings)))
            flip = (anchor + 1) % 4
            flipped = values.copy()
            flipped[:, flip] = 100.0 - flipped[:, flip]  # z-scores to exactly -z
            res = pca(make_panel(flipped), k=4)
            got = np.array(res.components[comp_index].loadings)
            want = np.array(comp.loadings)
            want[flip] = -want[flip]
            # only valid when the flipped column is not this component's anchor
            assert np.allclose(got, want, atol=1e-9)
            assert res.components[comp_index].explained_variance_ratio == pytest.approx(
                comp.explained_variance_ratio, abs=1e-12)

    def test_constant_column_names_the_query(self):
        values = np.column_stack([np.full(5, 9.0), np.arange(5, dtype=float)])
        with pytest.raises(ConstantColumn, match="q0"):
            pca(make_panel(values), k=1)

    def test_k_too_large_rejected(self):
        values = np.random.default_rng(1).uniform(0, 100, size=(3, 5))
        with pytest.raises(KTooLarge):
            pca(make_panel(values), k=3)  # min(3-1, 5) == 2

    def test_missing_cells_rejected(self):
        values = np.array([[1.0, np.nan], [2.0, 3.0], [4.0, 5.0]])
        with pytest.raises(ValueError):
            pca(make_panel(values), k=1)


class TestInterpretation:
    def planted(self):
        rng = np.random.default_rng(53)
        factor = np.array([2.0, 1.5, -0.5, -1.0, -2.0])
        noise = rng.normal(0, 0.1, size=(5, 3))
        block = np.column_stack([50 + 20 * factor, 50 + 18 * factor, 50 - 19 * factor])
        values = np.clip(block + noise, 0, 100)
        return make_panel(values, states=("US-MS", "US-LA", "US-AL", "US-AR", "US-KY"))

    def test_threshold_excludes_small_loadings(self):
        res = pca(self.planted(), k=2)
        interp = interpret_component(res, 0, threshold=0.9)
        assert interp.salient == ()

    def test_salient_sorted_by_magnitude_with_signs_kept(self):
        res = pca(self.planted(), k=1)
        interp = interpret_component(res, 0, threshold=0.2)
        ids = [q for q, _ in interp.salient]
        assert set(ids) == {"q0", "q1", "q2"}
        mags = [abs(l) for _, l in interp.salient]
        assert mags == sorted(mags, reverse=True)
        signs = {q: np.sign(l) for q, l in interp.salient}
        assert signs["q0"] == signs["q1"] == -signs["q2"]

    def test_top_states_sorted_by_score(self):
        res = pca(self.planted(), k=1)
        interp = interpret_component(res, 0, n_top_states=3)
        scores = [s for _, s in interp.top_states]
        assert scores == sorted(scores, reverse=True)
        assert len(interp.top_states) == 3

    def test_bad_component_index(self):
        res = pca(self.planted(), k=1)
        with pytest.raises(BadIndex):
            interpret_component(res, 5)
