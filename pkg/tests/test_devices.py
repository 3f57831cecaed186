from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcfsource.devices import (
    BASIS_NAMES,
    MEASURED_PUMP_SPLIT,
    PhaseVector,
    SplitterMatrix,
    X_PHASES,
    basis,
    demux_loss,
    ideal_4cfbs,
    phase_basis,
)
from mcfsource.qcore import InvariantError, born_probabilities
from mcfsource.source import werner_state


def test_ideal_splitter_entries():
    u = ideal_4cfbs().matrix
    np.testing.assert_array_equal(u[0], [0.5] * 4)
    np.testing.assert_array_equal(
        u * 2, [[1, 1, 1, 1], [1, 1, -1, -1], [1, -1, 1, -1], [1, -1, -1, 1]]
    )
    assert np.all(np.abs(u) == 0.5)


def test_splitter_is_self_inverse():
    u = ideal_4cfbs().matrix
    product = np.array([[sum(u[i, m] * u[m, j] for m in range(4)) for j in range(4)] for i in range(4)])
    np.testing.assert_allclose(product, np.eye(4), atol=1e-15)
    np.testing.assert_array_equal(u, u.T)


def test_column_orthogonality_brute_force():
    signs = ideal_4cfbs().signs
    for j in range(4):
        for k in range(4):
            total = sum(signs[m, j] * signs[m, k] for m in range(4))
            assert total == (4 if j == k else 0)


def test_z_is_identity_and_x0_is_splitter():
    np.testing.assert_array_equal(basis("Z").matrix, np.eye(4))
    np.testing.assert_allclose(basis("X0").matrix, ideal_4cfbs().matrix)


def test_x_bases_use_phase_table():
    for name, phi in X_PHASES.items():
        expected = ideal_4cfbs().matrix @ np.diag(np.exp(1j * np.array(phi)))
        np.testing.assert_allclose(basis(name).matrix, expected)


def test_unknown_basis():
    with pytest.raises(ValueError, match="unknown basis"):
        basis("Y")


@pytest.mark.parametrize("a,b", list(combinations(BASIS_NAMES, 2)))
def test_mutually_unbiased(a, b):
    ua, ub = basis(a).matrix, basis(b).matrix
    for j in range(4):
        for k in range(4):
            overlap = abs(np.vdot(ua[j], ub[k])) ** 2
            assert overlap == pytest.approx(0.25, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(list(X_PHASES)), st.floats(-10, 10))
def test_global_phase_irrelevant(name, shift):
    rho = werner_state(0.6)
    b0 = phase_basis(X_PHASES[name]).unitary
    b1 = phase_basis(PhaseVector(X_PHASES[name]).shifted(shift)).unitary
    np.testing.assert_allclose(born_probabilities(rho, b0, b0), born_probabilities(rho, b1, b1), atol=1e-12)


def test_phase_vector_compares_mod_2pi():
    assert PhaseVector([0, 1, 2, 3]) == PhaseVector([2 * np.pi, 1, 2 - 2 * np.pi, 3])
    assert PhaseVector([0, 1, 2, 3]) != PhaseVector([0, 1, 2, 3.1])
    with pytest.raises(InvariantError):
        PhaseVector([0, 1, np.nan, 0])


def test_custom_splitter_must_be_unitary():
    with pytest.raises(InvariantError):
        SplitterMatrix(np.full((4, 4), 0.5))


class TestDemux:
    def test_lossless_is_identity_on_rates(self):
        np.testing.assert_array_equal(demux_loss([1, 1, 1, 1]), np.ones((4, 4)))

    def test_three_percent_loss(self):
        t = demux_loss([0.97] * 4)
        assert t[0, 0] == pytest.approx(0.9409, abs=1e-15)

    def test_dark_core(self):
        t = demux_loss([0, 1, 1, 1])
        assert not t[0].any() and not t[:, 0].any()

    @pytest.mark.parametrize("bad", [[1.1, 1, 1, 1], [-0.1, 1, 1, 1], [1, 1, 1]])
    def test_rejects_bad_input(self, bad):
        with pytest.raises(ValueError):
            demux_loss(bad)


def test_measured_split_sums_to_one():
    assert sum(MEASURED_PUMP_SPLIT) == pytest.approx(1.0, abs=1e-12)
