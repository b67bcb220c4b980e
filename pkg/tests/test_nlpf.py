import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gldf.netmodel import build_index_maps, injection_vector
from gldf.nlpf import (
    SolverConfig,
    fixed_point_solve,
    fixed_point_solve_batch,
    residual,
)
from gldf.verify import random_radial_network
from gldf.ybus import build_system, open_circuit_voltage
from oracles import newton_power_flow, two_bus_network, two_bus_voltage


def test_zero_injection_returns_e_in_one_iteration(ieee13):
    sol = fixed_point_solve(ieee13.mats, np.zeros(ieee13.idx.n))
    assert sol.converged and sol.iterations == 1 and sol.residual == 0.0
    np.testing.assert_array_equal(sol.V, open_circuit_voltage(ieee13.mats))


def test_two_bus_closed_form():
    z, S = 0.01 + 0.02j, -(0.1 + 0.05j)
    mats = build_system(two_bus_network(z))
    sol = fixed_point_solve(mats, np.array([S]))
    assert sol.converged
    assert abs(sol.V[0] - two_bus_voltage(z, S)) <= 1e-10


def test_two_bus_closed_form_rotated_slack():
    from gldf.netmodel import Bus, Line, Network, SLACK

    z, S, vs = 0.02 + 0.01j, -(0.2 + 0.1j), 1.02 * np.exp(-2j * np.pi / 3)
    net = Network([Bus("0", "b", SLACK), Bus("1", "b")],
                  [Line("L", "0", "1", "b", [[z]])], slack_voltage=[vs])
    sol = fixed_point_solve(build_system(net), np.array([S]))
    assert abs(sol.V[0] - two_bus_voltage(z, S, vs)) <= 1e-10


def test_ieee13_reference_solution(ieee13):
    S = injection_vector(ieee13.net, ieee13.idx)
    sol = fixed_point_solve(ieee13.mats, S)
    assert sol.converged and sol.residual <= 1e-10
    assert 0.93 <= sol.magnitudes.min() <= sol.magnitudes.max() <= 1.01
    # power balance recovered from the admittance form
    I = ieee13.mats.Y_LL @ sol.V + ieee13.mats.Y_LS @ ieee13.mats.V_S
    np.testing.assert_allclose(sol.V * np.conj(I), S, atol=1e-8)


def test_residual_examples(ieee13):
    mats = ieee13.mats
    S = injection_vector(ieee13.net, ieee13.idx)
    E = open_circuit_voltage(mats)
    assert residual(mats, np.zeros_like(S), E) == 0.0
    sol = fixed_point_solve(mats, S)
    assert residual(mats, S, sol.V) <= 1e-10
    assert residual(mats, S, sol.V + 0.01) > 0
    V = sol.V.copy()
    V[0] = 0
    with pytest.raises(ZeroDivisionError):
        residual(mats, S, V)


def test_divergence_reported_not_raised(ieee13):
    S = 20 * injection_vector(ieee13.net, ieee13.idx)
    sol = fixed_point_solve(ieee13.mats, S)
    assert not sol.converged
    assert sol.message


def test_iteration_cap_reported(ieee13):
    S = injection_vector(ieee13.net, ieee13.idx)
    sol = fixed_point_solve(ieee13.mats, S, SolverConfig(max_iterations=2))
    assert not sol.converged and sol.iterations == 2
    assert "maximum iterations" in sol.message


def test_custom_initial_guess(ieee13):
    S = injection_vector(ieee13.net, ieee13.idx)
    ref = fixed_point_solve(ieee13.mats, S)
    warm = fixed_point_solve(ieee13.mats, S, SolverConfig(initial=ref.V))
    assert warm.converged and warm.iterations == 1


@pytest.mark.parametrize("kwargs", [{"tolerance": 0}, {"tolerance": -1}, {"max_iterations": 0}])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SolverConfig(**kwargs)


def test_batch_matches_scalar(ieee37):
    S_ref = injection_vector(ieee37.net, ieee37.idx)
    ks = np.array([-2.0, 0.0, 0.5, 1.0, 30.0])
    batch = fixed_point_solve_batch(ieee37.mats, S_ref[:, None] * ks)
    for c, k in enumerate(ks):
        sol = fixed_point_solve(ieee37.mats, k * S_ref)
        assert batch.converged[c] == sol.converged
        if sol.converged:
            # matrix-matrix and matrix-vector products may differ in the last bit
            np.testing.assert_allclose(batch.V[:, c], sol.V, rtol=0, atol=1e-14)
            assert abs(int(batch.iterations[c]) - sol.iterations) <= 1


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_matches_newton_on_random_trees(seed):
    rng = np.random.default_rng(seed)
    net = random_radial_network(rng, int(rng.integers(2, 11)), max_load=0.1)
    idx = build_index_maps(net)
    mats = build_system(net, idx)
    S = injection_vector(net, idx)
    sol = fixed_point_solve(mats, S)
    assert sol.converged
    V_newton = newton_power_flow(mats.Y_LL, mats.Y_LS, mats.V_S, S)
    assert np.abs(sol.V - V_newton).max() <= 1e-8
