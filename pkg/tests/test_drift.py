import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcfsource.devices import X_PHASES
from mcfsource.drift import (
    BAND_LIMIT_HZ,
    DriftModel,
    DriftTrace,
    Sinusoid,
    coincidence_series,
    default_drift_model,
    pattern_power_fraction,
    series_to_csv,
    simulate_drift,
    spectrum,
)
from mcfsource.measure import spawn_seeds


def all_pairs():
    return [(j, k) for j in range(4) for k in range(4)]


class TestSimulation:
    def test_static_model_is_constant(self):
        trace = simulate_drift(DriftModel(base_phases=X_PHASES["X1"]), duration=600, dt=5)
        assert trace.phases.shape == (120, 4)
        np.testing.assert_array_equal(trace.phases, np.tile(X_PHASES["X1"], (120, 1)))
        s = coincidence_series(trace, (0, 1))
        np.testing.assert_allclose(s, 0.25, atol=1e-12)

    def test_sinusoid_values(self):
        model = DriftModel((Sinusoid(core=2, period=100, amplitude=0.3, phase=0.1, offset=0.2),))
        trace = simulate_drift(model, 500, dt=5)
        t = trace.times
        np.testing.assert_allclose(trace.phases[:, 2], 0.2 + 0.3 * np.sin(2 * np.pi * t / 100 + 0.1))
        assert not trace.phases[:, [0, 1, 3]].any()

    def test_random_walk_increment_variance(self):
        r, dt = 1e-6, 5.0
        model = DriftModel(diffusion=r)
        trace = simulate_drift(model, duration=dt * 100_000, dt=dt, seed=11)
        inc = np.diff(trace.phases[:, 1:], axis=0)
        # three independent walks of 1e5 steps: relative error of the variance ~ 0.3%
        assert inc.var() == pytest.approx(r * dt, rel=0.02)
        assert not trace.phases[:, 0].any()

    def test_seeded_reproducibility(self):
        model = default_drift_model(seed=3)
        a = simulate_drift(model, 3600, seed=4)
        b = simulate_drift(default_drift_model(seed=3), 3600, seed=4)
        np.testing.assert_array_equal(a.phases, b.phases)
        c = simulate_drift(model, 3600, seed=5)
        assert not np.array_equal(a.phases, c.phases)

    def test_default_model_ranges(self):
        for seed in range(50):
            m = default_drift_model(seed=seed)
            assert 1 <= len(m.sinusoids) <= 3
            cores = [s.core for s in m.sinusoids]
            assert len(set(cores)) == len(cores) and set(cores) <= {1, 2, 3}
            for s in m.sinusoids:
                assert 260 <= s.period <= 780
            assert m.diffusion == 1e-6

    @pytest.mark.parametrize(
        "kwargs",
        [{"duration": 10, "dt": 0}, {"duration": 1, "dt": 5}, {"duration": 10, "dt": -1}],
    )
    def test_bad_timing(self, kwargs):
        with pytest.raises(ValueError):
            simulate_drift(DriftModel(), **kwargs)

    def test_bad_model(self):
        with pytest.raises(ValueError):
            DriftModel(diffusion=-1)
        with pytest.raises(ValueError):
            Sinusoid(core=4, period=1, amplitude=1)
        with pytest.raises(ValueError):
            Sinusoid(core=1, period=0, amplitude=1)
        with pytest.raises(ValueError):
            DriftTrace(1.0, np.zeros((3, 3)))

    def test_model_serializes(self):
        d = default_drift_model(seed=0).to_dict()
        assert set(d) == {"sinusoids", "diffusion", "base_phases", "walk_cores"}


class TestCoincidenceSeries:
    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from(list(X_PHASES)))
    def test_bounded_by_quarter(self, seed, name):
        trace = simulate_drift(default_drift_model(seed=seed, base_phases=X_PHASES[name], amplitude=3.0),
                               1200, seed=seed)
        for pair in all_pairs():
            s = coincidence_series(trace, pair)
            assert np.all(s >= -1e-15) and np.all(s <= 0.25 + 1e-12)

    def test_pi_periodic_in_each_core(self, rng):
        phases = rng.uniform(0, 2 * np.pi, size=(64, 4))
        base = coincidence_series(DriftTrace(1.0, phases), (1, 2))
        for core in range(4):
            shifted = phases.copy()
            shifted[:, core] += np.pi
            np.testing.assert_allclose(coincidence_series(DriftTrace(1.0, shifted), (1, 2)), base, atol=1e-14)

    def test_pair_range(self):
        with pytest.raises(ValueError):
            coincidence_series(DriftTrace(1.0, np.zeros((4, 4))), (0, 4))


class TestSpectrum:
    def test_pure_tone(self):
        dt, n, f0 = 5.0, 960, 1 / 240
        x = 0.1 + np.sin(2 * np.pi * f0 * np.arange(n) * dt)
        sp = spectrum(x, dt)
        assert sp.dominant_frequency() == pytest.approx(f0, abs=1 / (n * dt))
        assert sp.dc == pytest.approx(0.1, abs=1e-12)
        assert sp.power[1:].sum() == pytest.approx(0.5, rel=1e-9)

    @pytest.mark.parametrize("n", [100, 101])
    def test_parseval_boxcar(self, rng, n):
        x = rng.normal(size=n)
        sp = spectrum(x, 1.0)
        assert sp.power[1:].sum() == pytest.approx(x.var(), rel=1e-12)

    @pytest.mark.parametrize("n", [100, 101])
    def test_parseval_hann(self, rng, n):
        x = rng.normal(size=n)
        w = np.hanning(n)
        sp = spectrum(x, 1.0, window="hann")
        m = np.sum(w * x) / np.sum(w)
        expected = np.sum(w**2 * (x - m) ** 2) / np.sum(w**2)
        assert sp.power[1:].sum() == pytest.approx(expected, rel=1e-12)

    def test_constant_series(self):
        sp = spectrum(np.full(32, 0.25), 5.0)
        assert not sp.power[1:].any()
        assert sp.power_fraction_below(BAND_LIMIT_HZ) == 1.0

    def test_too_short(self):
        with pytest.raises(ValueError, match="at least 16"):
            spectrum(np.ones(15), 5.0)

    def test_bad_window(self):
        with pytest.raises(ValueError, match="window"):
            spectrum(np.ones(32), 5.0, window="kaiser")

    def test_csv_outputs(self, tmp_path):
        x = np.sin(np.arange(64) / 3)
        text = spectrum(x, 2.0).to_csv(tmp_path / "s.csv")
        assert text.splitlines()[0] == "frequency_hz,magnitude" and len(text.splitlines()) == 34
        assert (tmp_path / "s.csv").read_text() == text
        assert series_to_csv(x, 2.0).splitlines()[3].startswith("4.0,")


def default_traces(master, n):
    for seed in spawn_seeds(master, n):
        streams = spawn_seeds(seed, 2)
        model = default_drift_model(seed=streams[0])
        for phi in X_PHASES.values():
            yield simulate_drift(DriftModel(model.sinusoids, model.diffusion, phi), 7200, seed=streams[1])


class TestBandLimit:
    def test_static_pattern(self):
        assert pattern_power_fraction(simulate_drift(DriftModel(), 600)) == 1.0

    def test_pooled_fraction_matches_single_moving_pair(self):
        # only core 1 moves, so every pair shares one fringe shape up to scale
        model = DriftModel((Sinusoid(core=1, period=100, amplitude=0.01),))
        trace = simulate_drift(model, 4000)
        single = spectrum(coincidence_series(trace, (0, 0)), trace.dt, window="hann")
        assert pattern_power_fraction(trace, 0.004) == pytest.approx(single.power_fraction_below(0.004), abs=1e-4)

    def test_default_model_is_band_limited(self):
        worst = min(pattern_power_fraction(t) for t in default_traces(2024, 100))
        assert worst >= 0.99

    def test_default_cli_series_is_band_limited(self):
        worst = 1.0
        for trace in default_traces(31, 60):
            sp = spectrum(coincidence_series(trace, (0, 0)), trace.dt, window="hann")
            worst = min(worst, sp.power_fraction_below(BAND_LIMIT_HZ))
        assert worst >= 0.99

    def test_boxcar_leakage_is_why_hann_is_default(self):
        # a fringe between bins leaks slowly decaying sidelobes past the band edge
        t = np.arange(1440) * 5.0
        x = np.cos(2 * np.pi * t / 131.3)
        assert spectrum(x, 5.0, "boxcar").power_fraction_below(BAND_LIMIT_HZ) < 0.995
        assert spectrum(x, 5.0, "hann").power_fraction_below(BAND_LIMIT_HZ) > 0.9999
