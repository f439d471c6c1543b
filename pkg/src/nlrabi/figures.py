"""Data generators for the published figure panels.

Every generator takes a preset dictionary and returns ``{curve_name: rows}``
where ``rows`` is a list of ordered dicts ready for :func:`rows_to_csv`.
Plotting is left to the caller.
"""
from __future__ import annotations

import math

import numpy as np

from .criticality import level_energies, optimal_bias, potentials, transition_coupling
from .errors import RabiError
from .metrology import (preparation_time, qfi_peak, qfi_rho_max, qfi_state_derivative,
                        qfi_variational, qfi_xi_max)
from .model import ModelParams, SolveOptions, derived_scales, ground_state
from .observables import spin_expectation, wavefunction, x_squared
from .sweep import parallel_map
from .variational import minimize_ansatz

SOLVER = SolveOptions(strict=False)

PRESETS = {
    "fig1a": {"Omega": 0.001, "eps_list": [0.27, 0.28, 0.29, 0.30, 0.31, 0.32, 0.33, 0.34],
              "g_start": 0.88, "g_stop": 0.999, "count": 120},
    "fig1b": {"Omega_list": [0.01, 0.005, 0.001], "g_start": 0.88, "g_stop": 0.999,
              "count": 60},
    "fig1c": {"ratios": [0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001], "g_bar_c": 0.999},
    "fig2ab": {"Omega": 0.01, "eps_list": [0.0, 0.33], "g_start": 0.0, "g_stop": 0.9999,
               "count": 200},
    "fig2cf": {"Omega": 0.01, "eps0_g_list": [0.5, 0.9, 0.99],
               "eps_g_list": [0.985, 0.99, 0.995], "epsilon": 0.33, "points": 1024},
    "fig3": {"epsilon": 0.2, "count": 200, "g_small": 0.4, "g_large": 0.95,
             "g_zero_bias": 0.5, "x_max": 4.0, "points": 201},
    "fig4": {"Omega": 0.005, "eps_list": [0.0, 0.328], "g_start": 0.97, "g_stop": 0.999,
             "count": 150, "Omega_list": [0.01, 0.005, 0.001]},
}
FIGURES = tuple(PRESETS)
OMEGA = 1.0


def _tag(value: float) -> str:
    return format(value, "g")


def _ln(x: float) -> float:
    return math.log(x) if x > 0 else math.nan


def _ed_qfi_row(args):
    Omega, eps, gb = args
    p = ModelParams.quadratic(gb, omega=OMEGA, Omega=Omega, epsilon=eps)
    try:
        gs = ground_state(p, SOLVER)
        fq = qfi_state_derivative(p, opts=SOLVER, center=gs).total
        ok, n_max = gs.converged, gs.n_max
    except RabiError:
        fq, ok, n_max = math.nan, False, 0
    return {"g2_bar": gb, "epsilon": eps, "fq": fq, "ln_fq": _ln(fq),
            "converged": ok, "n_max": n_max}


def _ed_peak_row(args):
    Omega, eps = args
    p = ModelParams.quadratic(0.0, omega=OMEGA, Omega=Omega, epsilon=eps)
    gc = transition_coupling(eps, p) / p.g_T
    lo, hi = _peak_window(gc, Omega)
    try:
        gb, res = qfi_peak(p, lo, hi, points=41, opts=SOLVER)
    except RabiError:
        return None
    row = _ed_qfi_row((Omega, eps, gb))
    row["fq"], row["ln_fq"] = res.total, _ln(res.total)
    return row


def _peak_window(gc, Omega):
    """Search interval around a transition, kept clear of the collapse edge."""
    half = min(max(20.0 * Omega, 2e-4), 0.5 * (1.0 - gc))
    return max(gc - half, 0.0), gc + half


def _eps_max(gb):
    base = ModelParams.quadratic(0.0, omega=OMEGA)
    return optimal_bias(gb * base.g_T, base)


def _grid(preset):
    return [float(x) for x in np.linspace(preset["g_start"], preset["g_stop"], preset["count"])]


def fig1a(preset, workers=1):
    Omega, grid = preset["Omega"], _grid(preset)
    eps_all = [0.0] + list(preset["eps_list"])
    tasks = [(Omega, eps, gb) for eps in eps_all for gb in grid]
    tasks += [(Omega, _eps_max(gb), gb) for gb in grid]
    rows = parallel_map(_ed_qfi_row, tasks, workers)
    # peak widths scale with Omega; bracket a few widths around the level crossing
    peaks = parallel_map(_ed_peak_row, [(Omega, eps) for eps in preset["eps_list"]],
                         workers)
    out, n = {}, len(grid)
    for k, eps in enumerate(eps_all):
        curve = rows[k * n:(k + 1) * n]
        if k > 0 and peaks[k - 1] is not None:
            curve = sorted(curve + [peaks[k - 1]], key=lambda r: r["g2_bar"])
        out[f"fig1a_eps{_tag(eps)}"] = curve
    out["fig1a_envelope"] = rows[len(eps_all) * n:]
    return out


def _gain_row(args):
    Omega, gb = args
    eps = _eps_max(gb)
    biased = _ed_qfi_row((Omega, eps, gb))
    zero = _ed_qfi_row((Omega, 0.0, gb))
    return {"g2_bar": gb, "Omega": Omega, "epsilon_max": eps, "fq_eps_max": biased["fq"],
            "fq_zero": zero["fq"], "gain_ratio": biased["fq"] / zero["fq"],
            "converged": biased["converged"] and zero["converged"]}


def fig1b(preset, workers=1):
    grid = _grid(preset)
    out = {}
    for Omega in preset["Omega_list"]:
        out[f"fig1b_Omega{_tag(Omega)}"] = parallel_map(_gain_row, [(Omega, g) for g in grid],
                                                        workers)
    return out


def _fig1c_row(args):
    ratio, gbc = args
    row = {"ratio": ratio}
    nl = ModelParams.quadratic(0.0, omega=1.0, Omega=ratio)
    eps = optimal_bias(gbc * nl.g_T, nl)
    nl = nl.replace(epsilon=eps)
    lin = ModelParams.linear(0.0, omega=ratio, Omega=1.0)
    try:
        row["T_nonlinear"] = preparation_time(nl, gbc, opts=SOLVER)
    except RabiError:
        row["T_nonlinear"] = math.nan
    try:
        row["T_linear"] = preparation_time(lin, gbc, opts=SOLVER)
    except RabiError:
        row["T_linear"] = math.nan
    try:
        _, res = qfi_peak(nl, *_peak_window(gbc, ratio), points=41,
                          parameter="g2_bar", opts=SOLVER)
        row["fq_max_nonlinear"] = res.total
    except RabiError:
        row["fq_max_nonlinear"] = math.nan
    try:
        row["fq_linear"] = qfi_state_derivative(lin.with_g_bar(gbc), "g1_bar", opts=SOLVER).total
    except RabiError:
        row["fq_linear"] = math.nan
    row["fq_analytic"] = (qfi_rho_max(gbc, nl) + qfi_xi_max(gbc, nl)) * nl.g_T ** 2
    return row


def fig1c(preset, workers=1):
    rows = parallel_map(_fig1c_row, [(r, preset["g_bar_c"]) for r in preset["ratios"]], workers)
    return {"fig1c": rows}


def _fig2_row(args):
    Omega, eps, gb = args
    p = ModelParams.quadratic(gb, omega=OMEGA, Omega=Omega, epsilon=eps)
    row = {"g2_bar": gb}
    try:
        gs = ground_state(p, SOLVER)
        row.update(sigma_x_ed=spin_expectation(gs, "x"), sigma_z_ed=spin_expectation(gs, "z"),
                   x2_ed=x_squared(gs))
        ok, n_max = gs.converged, gs.n_max
    except RabiError:
        row.update(sigma_x_ed=math.nan, sigma_z_ed=math.nan, x2_ed=math.nan)
        ok, n_max = False, 0
    try:
        sol = minimize_ansatz(p)
        row.update(sigma_x_vm=sol.sigma_x, sigma_z_vm=sol.sigma_z, x2_vm=sol.x_squared)
    except RabiError:
        row.update(sigma_x_vm=math.nan, sigma_z_vm=math.nan, x2_vm=math.nan)
        ok = False
    row.update(converged=ok, n_max=n_max)
    return row


def fig2ab(preset, workers=1):
    grid = _grid(preset)
    out = {}
    for eps in preset["eps_list"]:
        rows = parallel_map(_fig2_row, [(preset["Omega"], eps, g) for g in grid], workers)
        out[f"fig2ab_eps{_tag(eps)}"] = rows
    return out


def fig2cf(preset, workers=1):
    out = {}
    cases = [(0.0, g) for g in preset["eps0_g_list"]]
    cases += [(preset["epsilon"], g) for g in preset["eps_g_list"]]
    for eps, gb in cases:
        p = ModelParams.quadratic(gb, omega=OMEGA, Omega=preset["Omega"], epsilon=eps)
        gs = ground_state(p, SOLVER)
        half = max(6.0, 6.0 / math.sqrt(derived_scales(p).varpi_minus))
        wf = wavefunction(gs, np.linspace(-half, half, preset["points"]))
        out[f"fig2cf_eps{_tag(eps)}_g{_tag(gb)}"] = [
            {"x": float(x), "psi_plus": float(a), "psi_minus": float(b)}
            for x, a, b in zip(wf.x, wf.psi_plus, wf.psi_minus)]
    return out


def fig3(preset, workers=1):
    eps = preset["epsilon"]
    grid = np.linspace(0.0, 0.999, preset["count"])
    out = {}
    for label, chi, bias in (("chi0_eps0", 0.0, 0.0), ("chi1_eps0", 1.0, 0.0),
                             (f"chi1_eps{_tag(eps)}", 1.0, eps)):
        e_p, e_m = level_energies(grid, chi, OMEGA)
        out[f"fig3_levels_{label}"] = [
            {"g2_bar": float(g), "eps0_plus": float(a), "eps0_minus": float(b),
             "eps_plus": float(a) - bias - 0.5 * OMEGA, "eps_minus": float(b) + bias - 0.5 * OMEGA}
            for g, a, b in zip(grid, e_p, e_m)]
    x = np.linspace(-preset["x_max"], preset["x_max"], preset["points"])
    panels = (("a", 0.0, 0.0, preset["g_zero_bias"]), ("b", 1.0, 0.0, preset["g_zero_bias"]),
              ("c", 1.0, eps, preset["g_small"]), ("d", 1.0, eps, preset["g_large"]))
    for name, chi, bias, gb in panels:
        p = ModelParams.quadratic(gb, omega=OMEGA, chi=chi, epsilon=bias)
        v_p, v_m = potentials(p, x)
        e_p, e_m = level_energies(gb, chi, OMEGA)
        lp, lm = float(e_p) - bias, float(e_m) + bias
        out[f"fig3_potentials_{name}"] = [
            {"x": float(xx), "v_plus": float(a), "v_minus": float(b),
             "level_plus": lp, "level_minus": lm}
            for xx, a, b in zip(x, v_p, v_m)]
    return out


def _fig4_row(args):
    Omega, eps, gb = args
    p = ModelParams.quadratic(gb, omega=OMEGA, Omega=Omega, epsilon=eps)
    sc = derived_scales(p)
    try:
        sol = minimize_ansatz(p)
        q = qfi_variational(p, solution=sol)
        return {"g2_bar": gb, "fq_rho": q.rho_part, "fq_xi": q.xi_part, "fq_total": q.total,
                "xi_plus_ratio": sol.xi_plus / sc.varpi_plus,
                "xi_minus_ratio": sol.xi_minus / sc.varpi_minus,
                "c_plus": sol.c_plus, "c_minus": sol.c_minus, "converged": True}
    except RabiError:
        return {"g2_bar": gb, "fq_rho": math.nan, "fq_xi": math.nan, "fq_total": math.nan,
                "xi_plus_ratio": math.nan, "xi_minus_ratio": math.nan,
                "c_plus": math.nan, "c_minus": math.nan, "converged": False}


def fig4(preset, workers=1):
    Omega, grid = preset["Omega"], _grid(preset)
    out = {}
    for eps in preset["eps_list"]:
        out[f"fig4_eps{_tag(eps)}"] = parallel_map(
            _fig4_row, [(Omega, eps, g) for g in grid], workers)
    analytic = []
    for eps in preset["eps_list"]:
        if eps == 0.0:
            continue
        p = ModelParams.quadratic(0.0, omega=OMEGA, Omega=Omega, epsilon=eps)
        gc = transition_coupling(eps, p) / p.g_T
        gb, res = qfi_peak(p, *_peak_window(gc, Omega), points=41,
                           method="variational")
        analytic.append({"epsilon": eps, "g2_bar_peak": gb, "fq_rho": res.rho_part,
                         "fq_xi": res.xi_part, "fq_rho_analytic": qfi_rho_max(gb, p),
                         "fq_xi_analytic": qfi_xi_max(gb, p)})
    out["fig4_analytic"] = analytic
    rows = []
    base = ModelParams.quadratic(0.0, omega=OMEGA, Omega=Omega)
    for gb in np.linspace(0.01, 0.999, preset["count"]):
        row = {"g2_bar": float(gb), "fq_xi_max": qfi_xi_max(gb, base)}
        for Om in preset["Omega_list"]:
            row[f"fq_rho_max_Omega{_tag(Om)}"] = qfi_rho_max(gb, base.replace(Omega=Om))
        rows.append(row)
    out["fig4d"] = rows
    return out


GENERATORS = {"fig1a": fig1a, "fig1b": fig1b, "fig1c": fig1c, "fig2ab": fig2ab,
              "fig2cf": fig2cf, "fig3": fig3, "fig4": fig4}


def generate(name: str, overrides: dict | None = None, workers: int = 1) -> dict:
    preset = dict(PRESETS[name])
    for key, value in (overrides or {}).items():
        if key not in preset:
            raise KeyError(key)
        preset[key] = value
    return GENERATORS[name](preset, workers)
