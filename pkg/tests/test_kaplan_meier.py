import numpy as np
import pytest

from survclust import SurvivalCurve, km_eval, km_fit
from survclust.errors import EmptySampleError, NoEventsError


def brute_force_km(samples, t):
    """Product over death times <= t of (n_j - d_j) / n_j, evaluated naively."""
    death_times = sorted({time for time, event in samples if event})
    value = 1.0
    for tj in death_times:
        if tj > t:
            break
        nj = sum(1 for time, _ in samples if time >= tj)
        dj = sum(1 for time, event in samples if event and time == tj)
        value *= (nj - dj) / nj
    return value


def empirical_survival(times, t):
    return sum(1 for x in times if x > t) / len(times)


class TestKmFit:
    def test_no_censoring(self):
        curve = km_fit([(1.0, True), (2.0, True), (3.0, True)])
        assert np.allclose(curve.event_times, [1.0, 2.0, 3.0])
        assert np.allclose(curve.survival, [2 / 3, 1 / 3, 0.0])
        assert curve.n_events == 3
        assert curve.n_subjects == 3

    def test_censored_subject_leaves_risk_set(self):
        # n = (3, 1), d = (1, 1) evaluated by hand
        curve = km_fit([(1.0, True), (2.0, False), (3.0, True)])
        assert np.allclose(curve.event_times, [1.0, 3.0])
        assert np.allclose(curve.survival, [2 / 3, 0.0])

    def test_mass_point(self):
        curve = km_fit([(5.0, True)] * 4)
        assert np.allclose(curve.event_times, [5.0])
        assert np.allclose(curve.survival, [0.0])
        assert curve.n_events == 4

    def test_censor_tied_with_death_stays_at_risk(self):
        # censored at t=2 counts toward n_j at death time 2: n=(4,3,1), d=(1,1,1)
        curve = km_fit([(1.0, True), (2.0, False), (2.0, True), (3.0, True)])
        assert np.allclose(curve.survival, [3 / 4, 3 / 4 * 2 / 3, 0.0])

    def test_empty_sample(self):
        with pytest.raises(EmptySampleError):
            km_fit([])

    def test_no_events(self):
        with pytest.raises(NoEventsError):
            km_fit([(1.0, False), (2.0, False)])

    def test_matches_brute_force_with_censoring(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(1, 20))
            samples = [(float(rng.integers(1, 8)), bool(rng.integers(0, 2))) for _ in range(n)]
            if not any(e for _, e in samples):
                samples[0] = (samples[0][0], True)
            curve = km_fit(samples)
            for t in np.linspace(0, 9, 30):
                assert km_eval(curve, float(t)) == pytest.approx(
                    brute_force_km(samples, float(t)), abs=1e-12)

    def test_uncensored_equals_empirical_survival(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            n = int(rng.integers(1, 40))
            times = rng.uniform(0, 10, size=n)
            curve = km_fit([(float(t), True) for t in times])
            for t in np.linspace(0, 11, 25):
                assert km_eval(curve, float(t)) == empirical_survival(times, t)

    def test_monotone_time_transform_invariance(self):
        samples = [(1.0, True), (2.0, False), (4.0, True), (4.0, True), (9.0, False)]
        base = km_fit(samples)
        warped = km_fit([(t ** 2 + 3 * t, e) for t, e in samples])
        assert np.allclose(base.survival, warped.survival)
        assert np.allclose(warped.event_times, [t ** 2 + 3 * t for t in base.event_times])

    def test_late_censor_adds_no_step(self):
        # a subject censored past the last death introduces no new factor:
        # the step times and event count are unchanged (it does enlarge every
        # risk set, so the step heights shift toward 1)
        samples = [(1.0, True), (2.0, True), (3.0, False)]
        base = km_fit(samples)
        extended = km_fit(samples + [(99.0, False)])
        assert np.array_equal(base.event_times, extended.event_times)
        assert extended.n_subjects == base.n_subjects + 1
        assert extended.n_events == base.n_events
        assert np.all(extended.survival >= base.survival)
        assert np.allclose(extended.survival, [3 / 4, 3 / 4 * 2 / 3])


class TestKmEval:
    def setup_method(self):
        self.curve = km_fit([(1.0, True), (2.0, False), (3.0, True)])

    def test_before_first_event(self):
        assert km_eval(self.curve, 0.0) == 1.0

    def test_between_event_times(self):
        assert km_eval(self.curve, 2.5) == pytest.approx(2 / 3)

    def test_at_last_death(self):
        curve = km_fit([(1.0, True), (2.0, True), (3.0, True)])
        assert km_eval(curve, 3.0) == 0.0

    def test_right_continuity_at_step(self):
        assert km_eval(self.curve, 1.0) == pytest.approx(2 / 3)


class TestCurveObject:
    def test_invariants_enforced(self):
        with pytest.raises(ValueError):
            SurvivalCurve(np.array([2.0, 1.0]), np.array([0.5, 0.2]), 2, 2)
        with pytest.raises(ValueError):
            SurvivalCurve(np.array([1.0, 2.0]), np.array([0.2, 0.5]), 2, 2)

    def test_json_round_trip(self):
        curve = km_fit([(1.0, True), (2.0, False), (3.0, True)])
        other = SurvivalCurve.from_json_dict(curve.to_json_dict())
        assert np.array_equal(other.event_times, curve.event_times)
        assert np.array_equal(other.survival, curve.survival)
        assert other.n_events == curve.n_events
        assert other.n_subjects == curve.n_subjects
