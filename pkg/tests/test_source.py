import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcfsource.devices import MEASURED_PUMP_SPLIT, basis
from mcfsource.qcore import born_probabilities, fidelity_direct
from mcfsource.source import SourceConfig, ideal_state, source_state, weighted_state, werner_state


def test_ideal_amplitudes():
    c = ideal_state().coefficient_table()
    np.testing.assert_array_equal(c, np.eye(4) / 2)


def test_ideal_z_table():
    z = basis("Z").unitary
    np.testing.assert_allclose(born_probabilities(ideal_state(), z, z), np.eye(4) / 4)


def test_uniform_weights_give_ideal():
    s = weighted_state(SourceConfig())
    np.testing.assert_allclose(s.amplitudes, ideal_state().amplitudes)


def test_measured_split_fidelity():
    s = weighted_state(SourceConfig(pump_weights=MEASURED_PUMP_SPLIT))
    # (sum sqrt(w) / 2)^2 evaluated by hand from the four ratios
    assert fidelity_direct(s, ideal_state()) == pytest.approx(0.9993136631097748, abs=1e-12)


def test_single_core_is_product_state():
    s = weighted_state(SourceConfig(pump_weights=(1, 0, 0, 0)))
    expected = np.zeros(16)
    expected[0] = 1
    np.testing.assert_allclose(np.abs(s.amplitudes), expected)
    assert fidelity_direct(s, ideal_state()) == pytest.approx(0.25)


def test_weights_are_normalized():
    cfg = SourceConfig(pump_weights=(2, 2, 2, 2))
    assert cfg.pump_weights == (0.25, 0.25, 0.25, 0.25)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"pump_weights": (0, 0, 0, 0)},
        {"pump_weights": (-1, 1, 1, 1)},
        {"visibility": 1.5},
        {"pair_rate": -1.0},
        {"core_phases": (0, 0, 0)},
    ],
)
def test_invalid_config(kwargs):
    with pytest.raises(ValueError):
        SourceConfig(**kwargs)


def test_werner_endpoints():
    assert werner_state(1.0).is_pure
    assert fidelity_direct(werner_state(0.0), ideal_state()) == pytest.approx(1 / 16)
    assert fidelity_direct(werner_state(0.775), ideal_state()) == pytest.approx(0.7890625, abs=1e-12)
    with pytest.raises(ValueError):
        werner_state(-0.01)


def test_source_state_combines_weights_phases_and_noise():
    cfg = SourceConfig(pump_weights=MEASURED_PUMP_SPLIT, core_phases=(0, 0.1, 0.2, 0.3), visibility=0.9)
    rho = source_state(cfg).rho
    w = np.asarray(cfg.pump_weights)
    # coherence between |00> and |11>
    expected = 0.9 * np.sqrt(w[0] * w[1]) * np.exp(-1j * 0.1)
    assert rho[0, 5] == pytest.approx(expected, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 10), min_size=4, max_size=4).filter(lambda w: sum(w) > 1e-6),
       st.lists(st.floats(-7, 7), min_size=4, max_size=4))
def test_weighted_state_normalized(weights, phases):
    s = weighted_state(SourceConfig(pump_weights=tuple(weights), core_phases=tuple(phases)))
    assert np.vdot(s.amplitudes, s.amplitudes).real == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=4, max_size=4).filter(lambda w: sum(w) > 1e-3))
def test_fidelity_nonincreasing_away_from_uniform(target):
    target = np.asarray(target) / np.sum(target)
    uniform = np.full(4, 0.25)
    fids = []
    for t in np.linspace(0, 1, 11):
        w = (1 - t) * uniform + t * target
        fids.append(fidelity_direct(weighted_state(SourceConfig(pump_weights=tuple(w))), ideal_state()))
    assert all(b <= a + 1e-12 for a, b in zip(fids, fids[1:]))
