import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import variance_by_modes
from rigidity_lab.hyperbolic import Cutoff, full_lemma_check
from rigidity_lab.indexset import IndexSet
from rigidity_lab.kernel import KernelSpec, observed_bloch_constant
from rigidity_lab.random_subset import sample_lambda
from rigidity_lab.rng import RngState
from rigidity_lab.variance import (
    SWEEP_HEADER,
    RadialStatistic,
    bernoulli_expected_variance,
    bloch_bound_integral,
    constant_statistic,
    cutoff_statistic,
    indicator_statistic,
    rigidity_sweep,
    sweep_to_csv,
    sweep_to_json,
    variance_radial,
    zero_statistic,
)

LAC7 = KernelSpec(IndexSet.powers(2, 7), 128)
RANK1 = KernelSpec(IndexSet((0,)), 0)


class TestRadialStatistic:
    def test_support_validation(self):
        with pytest.raises(ValueError):
            RadialStatistic(lambda t: t, 1.5)
        with pytest.raises(ValueError):
            RadialStatistic(lambda t: t, 0.5, (0.7,))

    def test_edges_include_breakpoints(self):
        e = cutoff_statistic(0.5, 0.9).edges()
        assert {0.0, 0.5, 0.9, 1.0} <= set(e.tolist())


class TestVarianceRadial:
    def test_constant_profile_is_zero(self):
        assert variance_radial(LAC7, constant_statistic(3.0)).value == 0.0
        assert variance_radial(LAC7, zero_statistic()).value == 0.0

    @pytest.mark.parametrize("r2", [0.1, 0.5, 0.8])
    def test_rank_one_bernoulli(self, r2):
        r = np.sqrt(r2)
        res = variance_radial(RANK1, indicator_statistic(r))
        assert res.value == pytest.approx(r2 * (1 - r2), rel=1e-10)

    def test_against_mode_oracle(self):
        phi = cutoff_statistic(0.5, 0.9)
        want = variance_by_modes(LAC7.exponents, phi, (0.5, 0.9))
        assert variance_radial(LAC7, phi).value == pytest.approx(want, rel=1e-9)

    def test_indicator_against_mode_oracle(self):
        spec = KernelSpec(IndexSet.full(30), 30)
        phi = indicator_statistic(0.6)
        want = variance_by_modes(spec.exponents, phi, (0.6,))
        assert variance_radial(spec, phi).value == pytest.approx(want, rel=1e-9)

    @settings(max_examples=15, deadline=None)
    @given(st.sets(st.integers(0, 300), min_size=1, max_size=12), st.floats(0.1, 0.6), st.floats(0.05, 0.35))
    def test_non_negative_and_matches_modes(self, elems, r0, gap):
        spec = KernelSpec(IndexSet.of(elems), max(elems))
        phi = cutoff_statistic(r0, r0 + gap)
        got = variance_radial(spec, phi).value
        assert got >= 0
        assert got == pytest.approx(variance_by_modes(spec.exponents, phi, (r0, r0 + gap)), rel=1e-7, abs=1e-12)

    def test_dominated_by_bloch_integral(self):
        spec = KernelSpec(IndexSet.powers(2, 12), 4096)
        c = observed_bloch_constant(spec)
        for r in (0.9, 0.99):
            phi = cutoff_statistic(0.5, r)
            assert variance_radial(spec, phi).value <= 4 * c * bloch_bound_integral(phi).value


class TestComparisonIntegrals:
    def test_constant(self):
        assert bloch_bound_integral(constant_statistic(1.0)).value == 0.0
        assert bernoulli_expected_variance(constant_statistic(1.0)).value == 0.0

    def test_bloch_matches_lemma(self):
        for r in (0.9, 0.99):
            a = bloch_bound_integral(cutoff_statistic(0.5, r)).value
            b = full_lemma_check(Cutoff(0.5, r)).value
            assert a == pytest.approx(b, rel=1e-8)

    def test_bloch_decreasing(self):
        vals = [bloch_bound_integral(cutoff_statistic(0.5, r)).value for r in (0.9, 0.99, 0.999)]
        assert vals[0] > vals[1] > vals[2]

    @pytest.mark.parametrize("phi", [cutoff_statistic(0.5, 0.9), indicator_statistic(0.7), cutoff_statistic(0.2, 0.99)])
    def test_bernoulli_below_twice_bloch(self, phi):
        assert bernoulli_expected_variance(phi).value <= 2 * bloch_bound_integral(phi).value

    def test_bernoulli_mean_over_random_sets(self):
        phi = cutoff_statistic(0.3, 0.7)
        root = RngState(5)
        vals = [variance_radial(KernelSpec(sample_lambda(200, root.spawn(i)).elements, 200), phi).value
                for i in range(300)]
        se = np.std(vals, ddof=1) / np.sqrt(len(vals))
        assert abs(np.mean(vals) - bernoulli_expected_variance(phi).value) < 3 * se


class TestSweep:
    def test_empty(self):
        assert rigidity_sweep(LAC7, 0.5, []) == []

    def test_r0_must_be_below_radii(self):
        with pytest.raises(ValueError):
            rigidity_sweep(LAC7, 0.9, [0.95, 0.8])

    def test_lacunary_last_below_first(self):
        # The decrease only sets in once r is well past the hump near 0.99.
        spec = KernelSpec(IndexSet.powers(2, 16), 2**16)
        rows = rigidity_sweep(spec, 0.5, [0.9, 0.99999], eps=[0.2])
        assert rows[-1].variance.value < rows[0].variance.value
        assert [r.eps_flags for r in rows] == [((0.2, False),), ((0.2, True),)]

    def test_workers_do_not_change_rows(self):
        a = sweep_to_csv(rigidity_sweep(LAC7, 0.5, [0.7, 0.9], eps=[0.1, 0.3]))
        b = sweep_to_csv(rigidity_sweep(LAC7, 0.5, [0.7, 0.9], eps=[0.1, 0.3], workers=2))
        assert a == b

    def test_csv_and_json(self):
        rows = rigidity_sweep(LAC7, 0.5, [0.9], eps=[0.3])
        text = sweep_to_csv(rows)
        assert "\r" not in text
        parsed = list(csv.reader(io.StringIO(text)))
        assert tuple(parsed[0]) == SWEEP_HEADER
        assert float(parsed[1][1]) == rows[0].variance.value
        assert parsed[1][5] == "0.3:1"
        doc = json.loads(sweep_to_json(rows))
        assert doc["rows"][0]["variance"]["value"] == rows[0].variance.value
