import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlrabi import (IntegrandBlowup, ModelParams, ParameterError, ground_state, minimize_ansatz,
                    optimal_bias, preparation_time, qfi_fidelity, qfi_peak, qfi_rho_max,
                    qfi_state_derivative, qfi_variational, qfi_xi_max, transition_coupling)
from nlrabi.metrology import integrate_inverse_gap, qfi, qfi_analytic_max

BASE = ModelParams.quadratic(0.0)
G_T = BASE.g_T


def flipped(gs):
    return dataclasses.replace(gs, coefficients=-gs.coefficients)


@pytest.mark.parametrize("route", [qfi_state_derivative, qfi_fidelity])
def test_gauge_invariance(route):
    p = ModelParams.quadratic(0.9, Omega=0.01, epsilon=0.2)
    gs = ground_state(p)
    a = route(p, center=gs).total
    b = route(p, center=flipped(gs)).total
    assert a == pytest.approx(b, rel=1e-12)


def test_zero_coupling_finite():
    p = ModelParams.quadratic(0.0, Omega=0.01)
    f_sd = qfi_state_derivative(p).total
    f_fid = qfi_fidelity(p).total
    assert 0 < f_sd < math.inf
    assert f_fid == pytest.approx(f_sd, rel=5e-3)


def test_method_agreement_grid():
    for gb in np.linspace(0.02, 0.98, 20):
        p = ModelParams.quadratic(gb, Omega=0.01)
        gs = ground_state(p)
        a = qfi_state_derivative(p, center=gs).total
        b = qfi_fidelity(p, center=gs).total
        assert abs(a - b) <= 5e-3 * a, gb


@settings(max_examples=10, deadline=None)
@given(gb=st.floats(0.0, 0.97), Omega=st.floats(0.01, 1.0), eps=st.floats(0.0, 0.34))
def test_method_agreement_property(gb, Omega, eps):
    p = ModelParams.quadratic(gb, Omega=Omega, epsilon=eps)
    a = qfi_state_derivative(p).total
    b = qfi_fidelity(p).total
    assert a >= 0 and b >= 0
    assert abs(a - b) <= 5e-3 * max(a, b) + 1e-9


def test_fidelity_step_stable():
    p = ModelParams.quadratic(0.0, Omega=0.1, epsilon=0.05)
    values = [qfi_fidelity(p, delta=d * G_T).total for d in (1e-3, 1e-4, 1e-5)]
    assert max(values) - min(values) <= 1e-3 * values[0]


def test_step_floor_guard():
    p = ModelParams.quadratic(0.3, Omega=0.1)
    res = qfi_fidelity(p, delta=1e-20)
    assert res.delta >= 1e-9 * G_T / 2
    assert math.isfinite(res.total)
    with pytest.raises(ParameterError):
        qfi_fidelity(p, delta=-1.0)


def test_parameter_covariance():
    p = ModelParams.quadratic(0.7, Omega=0.05, epsilon=0.1)
    gs = ground_state(p)
    raw = qfi_state_derivative(p, "g2", center=gs).total
    barred = qfi_state_derivative(p, "g2_bar", center=gs).total
    assert barred == pytest.approx(G_T ** 2 * raw, rel=1e-12)


def test_parameter_kind_checked():
    with pytest.raises(ParameterError):
        qfi_state_derivative(ModelParams.quadratic(0.3), "g1")
    with pytest.raises(ParameterError):
        qfi_state_derivative(ModelParams.linear(0.3), "g2_bar")
    with pytest.raises(ParameterError):
        qfi(ModelParams.quadratic(0.3), "bogus")


def test_linear_coupling_qfi():
    p = ModelParams.linear(0.5, omega=0.1)
    res = qfi_state_derivative(p)
    assert res.parameter == "g1"
    assert res.total == pytest.approx(qfi_fidelity(p).total, rel=5e-3)
    assert qfi_state_derivative(p, "g1_bar").total == pytest.approx(
        p.g_c ** 2 * res.total, rel=1e-12)


def test_stencil_stays_below_collapse():
    p = ModelParams.quadratic(1 - 1e-7, Omega=0.01)
    assert qfi_variational(p).total > 0


def test_qfi_grows_toward_collapse():
    grid = [0.9, 0.95, 0.98, 0.99, 0.995, 0.999]
    logs = [math.log(qfi_state_derivative(ModelParams.quadratic(g, Omega=0.001)).total)
            for g in grid]
    assert all(b > a for a, b in zip(logs, logs[1:]))


def test_decomposition_sum_exact():
    for eps, gb in [(0.0, 0.5), (0.2, 0.8), (0.328, 0.99)]:
        res = qfi_variational(ModelParams.quadratic(gb, Omega=0.005, epsilon=eps))
        assert res.total == res.rho_part + res.xi_part
        assert res.rho_part >= 0 and res.xi_part >= 0


def test_zero_bias_is_squeezing_dominated():
    res = qfi_variational(ModelParams.quadratic(0.5, Omega=0.005))
    assert res.rho_part < 0.01 * res.xi_part


def test_transition_dominated_at_crossing():
    p = ModelParams.quadratic(0.0, Omega=0.005, epsilon=0.328)
    p = p.replace(g=transition_coupling(0.328, p))
    res = qfi_variational(p)
    assert res.rho_part > 100 * res.xi_part


def test_variational_total_near_ed_at_peak():
    eps = 0.3
    p = ModelParams.quadratic(0.0, Omega=0.01, epsilon=eps)
    gc = transition_coupling(eps, p) / G_T
    gb, vm = qfi_peak(p, gc - 0.01, gc + 0.01, points=21, method="variational")
    ed = qfi_state_derivative(p.with_g_bar(gb)).total
    assert vm.total == pytest.approx(ed, rel=0.2)


def test_peak_tracks_transition():
    eps = 0.3
    p = ModelParams.quadratic(0.0, Omega=0.01, epsilon=eps)
    gc = transition_coupling(eps, p) / G_T
    gb, _ = qfi_peak(p, gc - 0.02, gc + 0.02, points=41)
    assert abs(gb - gc) <= 0.005


def test_analytic_small_coupling_limits():
    p = ModelParams.quadratic(0.0, Omega=0.01)
    assert qfi_rho_max(1e-9, p) == pytest.approx(1 / (4 * 0.01 ** 2 * G_T ** 2), rel=1e-6)
    assert qfi_xi_max(1e-9, p) == pytest.approx(1 / (8 * G_T ** 2), rel=1e-6)
    both = qfi_analytic_max(0.5, p)
    assert both.total == both.rho_part + both.xi_part


def test_analytic_domain():
    p = ModelParams.quadratic(0.0, Omega=0.01)
    for gb in (0.0, 1.0, -0.2):
        with pytest.raises(ParameterError):
            qfi_rho_max(gb, p)
    with pytest.raises(ParameterError):
        qfi_xi_max(0.5, ModelParams.quadratic(0.0, chi=0.5))


def test_crossover_example():
    p = ModelParams.quadratic(0.0, Omega=0.01)
    assert qfi_rho_max(0.9999, p) > qfi_xi_max(0.9999, p)


def test_inverse_gap_constant():
    assert integrate_inverse_gap(lambda g: 0.25, 0.999) == pytest.approx(0.999 / 0.25, rel=1e-12)
    assert preparation_time(BASE, 0.5, gap=lambda g: 2.0) == pytest.approx(0.25, rel=1e-12)


def test_inverse_gap_blowup():
    with pytest.raises(IntegrandBlowup):
        integrate_inverse_gap(lambda g: abs(g - 0.5), 1.0)
    with pytest.raises(ParameterError):
        preparation_time(BASE, 0.5, gap="nope")


def test_preparation_time_decoupled_qubit():
    # Omega = 0.4, eps = 0: the even-sector gap at g = 0 is Omega
    p = ModelParams.quadratic(0.0, Omega=0.4)
    t = preparation_time(p, 0.1)
    assert 0.1 / 0.6 < t < 0.1 / 0.3


def test_preparation_time_gap_options_agree():
    p = ModelParams.quadratic(0.0, Omega=0.1)
    p = p.replace(epsilon=optimal_bias(0.9 * G_T, p))
    t_ed = preparation_time(p, 0.9, epsrel=1e-4)
    t_vm = preparation_time(p, 0.9, gap="variational", epsrel=1e-4)
    assert t_vm == pytest.approx(t_ed, rel=0.1)


def test_minimizer_reused_by_variational_route():
    p = ModelParams.quadratic(0.7, Omega=0.01, epsilon=0.1)
    sol = minimize_ansatz(p)
    assert qfi_variational(p, solution=sol).total == pytest.approx(
        qfi_variational(p).total, rel=1e-6)
