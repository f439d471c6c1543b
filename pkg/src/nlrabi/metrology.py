"""Quantum Fisher information of the ground state with respect to the coupling.

Three numerical routes are provided, all differentiating with respect to the
dimensionful coupling ``g`` and rescaled afterwards for barred parameters:

* :func:`qfi_state_derivative` -- central-difference state derivative of ED
  ground states;
* :func:`qfi_fidelity` -- fidelity susceptibility of ED ground states;
* :func:`qfi_variational` -- polaron ansatz, split into the amplitude
  (``rho``) and width (``xi``) contributions.

:func:`qfi_rho_max` and :func:`qfi_xi_max` give the leading-order peak values
at the optimal bias, and :func:`preparation_time` integrates the inverse gap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from .errors import (BranchJump, IntegrandBlowup, OptimizationFailed, ParameterError,
                     StepTooCoarse)
from .model import GroundState, ModelParams, SolveOptions, ground_state
from .variational import VariationalSolution, minimize_ansatz, variational_gap

METHODS = ("state_derivative", "fidelity", "variational", "analytic_max")
PARAMETERS = ("g2", "g2_bar", "g1", "g1_bar")

RICHARDSON_RTOL = 0.01
DELTA_FLOOR = 1e-9


@dataclass(frozen=True)
class QfiResult:
    total: float
    method: str
    parameter: str
    rho_part: float | None = None
    xi_part: float | None = None
    delta: float | None = None
    n_max: int | None = None


def _resolve_parameter(params: ModelParams, parameter: str | None) -> tuple[str, float]:
    """Parameter name and the factor converting d/dg QFI into it."""
    if parameter is None:
        parameter = "g2" if params.is_quadratic else "g1"
    if parameter not in PARAMETERS:
        raise ParameterError(f"parameter must be one of {PARAMETERS}, got {parameter!r}")
    if parameter.startswith("g2") != params.is_quadratic:
        raise ParameterError(f"parameter {parameter!r} does not match {params.coupling.value} coupling")
    factor = params.g_scale ** 2 if parameter.endswith("_bar") else 1.0
    return parameter, factor


def _default_delta(params: ModelParams, delta: float | None) -> float:
    scale = params.g_scale
    if delta is None:
        delta = 1e-5 * scale
    elif not delta > 0:
        raise ParameterError(f"delta must be positive, got {delta}")
    # leave room for at least one halving above the floor
    delta = max(delta, 2.0 * DELTA_FLOOR * scale)
    if params.is_quadratic:
        # keep the stencil clear of the collapse point
        delta = min(delta, 0.5 * (params.g_T - abs(params.g)))
    return delta


class _Stencil:
    """ED ground states around one coupling at a common truncation."""

    def __init__(self, params: ModelParams, opts: SolveOptions | None,
                 center: GroundState | None = None):
        self.params = params
        self.opts = opts or SolveOptions()
        self.center = center if center is not None else ground_state(params, self.opts)
        self.psi0 = self.center.coefficients
        self._cache: dict[float, np.ndarray] = {}

    def state(self, offset: float) -> np.ndarray:
        if offset not in self._cache:
            shifted = self.params.replace(g=self.params.g + offset)
            gs = ground_state(shifted, self.opts, n_max=self.center.n_max,
                              guess=self.center.energy)
            vec = gs.coefficients
            # sign-align with the centre state
            self._cache[offset] = -vec if vec @ self.psi0 < 0 else vec
        return self._cache[offset]


def _refine(estimate: Callable[[float], float], delta: float, floor: float,
            extrapolate: Callable[[float, float], float]) -> tuple[float, float]:
    """Halve the step until successive estimates agree within 1 %."""
    f1 = estimate(delta)
    while True:
        half = 0.5 * delta
        if half < floor:
            raise StepTooCoarse(f"QFI estimate not stable down to step {delta:.3e}")
        f2 = estimate(half)
        if abs(f1 - f2) <= RICHARDSON_RTOL * abs(f2) or max(abs(f1), abs(f2)) < 1e-300:
            return float(extrapolate(f1, f2)), half
        f1, delta = f2, half


def qfi_state_derivative(params: ModelParams, parameter: str | None = None,
                         delta: float | None = None, opts: SolveOptions | None = None,
                         center: GroundState | None = None) -> QfiResult:
    """``4 [<psi'|psi'> - |<psi'|psi>|^2]`` with a central-difference ``psi'``."""
    parameter, factor = _resolve_parameter(params, parameter)
    delta = _default_delta(params, delta)
    st = _Stencil(params, opts, center)

    def estimate(d):
        dpsi = (st.state(d) - st.state(-d)) / (2.0 * d)
        proj = dpsi @ st.psi0
        return 4.0 * max(dpsi @ dpsi - proj * proj, 0.0)

    value, step = _refine(estimate, delta, DELTA_FLOOR * params.g_scale,
                          lambda f1, f2: (4.0 * f2 - f1) / 3.0)
    return QfiResult(total=max(value, 0.0) * factor, method="state_derivative",
                     parameter=parameter, delta=step, n_max=st.center.n_max)


def qfi_fidelity(params: ModelParams, parameter: str | None = None,
                 delta: float | None = None, opts: SolveOptions | None = None,
                 center: GroundState | None = None) -> QfiResult:
    """Fidelity susceptibility ``8 (1 - |<psi(g)|psi(g+d)>|) / d^2``.

    ``1 - |<a|b>|`` is evaluated as ``|a - b|^2 / 2`` for sign-aligned unit
    vectors, which avoids cancellation at small steps.  The one-sided
    estimate has an O(d) error, removed by first-order Richardson
    extrapolation over ``d`` and ``d/2``.
    """
    parameter, factor = _resolve_parameter(params, parameter)
    delta = _default_delta(params, delta)
    st = _Stencil(params, opts, center)

    def estimate(d):
        diff = st.state(d) - st.psi0
        return 4.0 * (diff @ diff) / (d * d)

    value, step = _refine(estimate, delta, DELTA_FLOOR * params.g_scale,
                          lambda f1, f2: 2.0 * f2 - f1)
    return QfiResult(total=max(value, 0.0) * factor, method="fidelity",
                     parameter=parameter, delta=step, n_max=st.center.n_max)


def _variational_path(params, sol0, d):
    out = []
    for sign in (1.0, -1.0):
        p = params.replace(g=params.g + sign * d)
        out.append(minimize_ansatz(p, start=(sol0.xi_plus, sol0.xi_minus), local=True))
    return out


def _jumped(q_plus, q0, q_minus) -> bool:
    second = abs(q_plus - 2.0 * q0 + q_minus)
    first = abs(q_plus - q_minus)
    return second > 0.5 * first and second > 1e-7 * (1.0 + abs(q0))


def qfi_variational(params: ModelParams, parameter: str | None = None,
                    delta: float | None = None,
                    solution: VariationalSolution | None = None,
                    max_shrink: int = 6) -> QfiResult:
    """Polaron-ansatz QFI ``F_rho + F_xi`` from finite differences of the minimizer path.

    ``F_rho = 4 sum (dc/dg)^2`` tracks the spin weights and
    ``F_xi = 4 sum c^2 (dxi/dg)^2 / (8 xi^2)`` the Gaussian widths; their
    cross term vanishes identically for normalized Gaussians.
    """
    parameter, factor = _resolve_parameter(params, parameter)
    d = _default_delta(params, delta)
    sol0 = solution if solution is not None else minimize_ansatz(params)

    for _ in range(max_shrink + 1):
        try:
            sp_, sm_ = _variational_path(params, sol0, d)
        except OptimizationFailed:
            d *= 0.25
            continue
        fields = ("xi_plus", "xi_minus", "c_plus", "c_minus")
        if not any(_jumped(getattr(sp_, f), getattr(sol0, f), getattr(sm_, f)) for f in fields):
            break
        d *= 0.25
    else:
        raise BranchJump(f"variational minimizer path discontinuous at g = {params.g}")

    dc_p = (sp_.c_plus - sm_.c_plus) / (2.0 * d)
    dc_m = (sp_.c_minus - sm_.c_minus) / (2.0 * d)
    dxi_p = (sp_.xi_plus - sm_.xi_plus) / (2.0 * d)
    dxi_m = (sp_.xi_minus - sm_.xi_minus) / (2.0 * d)
    rho = 4.0 * (dc_p ** 2 + dc_m ** 2)
    xi = 4.0 * (sol0.c_plus ** 2 * dxi_p ** 2 / (8.0 * sol0.xi_plus ** 2)
                + sol0.c_minus ** 2 * dxi_m ** 2 / (8.0 * sol0.xi_minus ** 2))
    rho, xi = float(rho * factor), float(xi * factor)
    return QfiResult(total=rho + xi, method="variational", parameter=parameter,
                     rho_part=rho, xi_part=xi, delta=d)


def _check_analytic(g2_bar: float, params: ModelParams):
    if not params.is_quadratic or params.chi != 1.0:
        raise ParameterError("analytic maxima require the quadratic model with chi = 1")
    if not 0.0 < g2_bar < 1.0:
        raise ParameterError(f"g2_bar must lie in (0, 1), got {g2_bar}")


def qfi_rho_max(g2_bar: float, params: ModelParams) -> float:
    """Leading-order transition contribution at the optimal bias (per g2^2)."""
    _check_analytic(g2_bar, params)
    if params.Omega == 0:
        return math.inf
    gb = g2_bar
    w_p, w_m = math.sqrt(1.0 + gb), math.sqrt(1.0 - gb)
    w2 = w_p * w_m
    num = (gb ** 4 + 4.0 * (1.0 + w2) - gb ** 2 * (5.0 + 3.0 * w2)) ** 2 * params.omega ** 2
    den = (2.0 * w2 ** 4.5 * (w_p + w_m) ** 5 * (1.0 + w2) ** 2
           * params.Omega ** 2 * params.g_T ** 2)
    return num / den


def qfi_xi_max(g2_bar: float, params: ModelParams) -> float:
    """Leading-order squeezing contribution at the optimal bias (per g2^2)."""
    _check_analytic(g2_bar, params)
    gb = g2_bar
    return (1.0 + gb ** 2) / (8.0 * (1.0 - gb ** 2) ** 2 * params.g_T ** 2)


def qfi_analytic_max(g2_bar: float, params: ModelParams) -> QfiResult:
    rho, xi = qfi_rho_max(g2_bar, params), qfi_xi_max(g2_bar, params)
    return QfiResult(total=rho + xi, method="analytic_max", parameter="g2",
                     rho_part=rho, xi_part=xi)


_ROUTES = {
    "state_derivative": qfi_state_derivative,
    "fidelity": qfi_fidelity,
    "variational": qfi_variational,
}


def qfi(params: ModelParams, method: str = "state_derivative", **kwargs) -> QfiResult:
    try:
        route = _ROUTES[method]
    except KeyError:
        raise ParameterError(f"method must be one of {tuple(_ROUTES)}, got {method!r}") from None
    return route(params, **kwargs)


def qfi_peak(params: ModelParams, lo: float, hi: float, points: int = 41,
             method: str = "state_derivative", **kwargs) -> tuple[float, QfiResult]:
    """Maximize the QFI over ``g_bar`` in ``[lo, hi]``.

    A uniform scan locates the best grid point, then a bounded scalar search
    refines inside the neighbouring cells.  Returns ``(g_bar_peak, result)``.
    """
    grid = np.linspace(lo, hi, points)
    values = [qfi(params.with_g_bar(x), method, **kwargs).total for x in grid]
    i = int(np.argmax(values))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, points - 1)]
    res = minimize_scalar(lambda x: -qfi(params.with_g_bar(x), method, **kwargs).total,
                          bounds=(a, b), method="bounded",
                          options={"xatol": 1e-6 * (hi - lo) + 1e-12})
    best_x = float(res.x) if -res.fun >= values[i] else float(grid[i])
    return best_x, qfi(params.with_g_bar(best_x), method, **kwargs)


def integrate_inverse_gap(gap: Callable[[float], float], upper: float, cap: float = 1e8,
                          epsrel: float = 1e-6, limit: int = 200) -> float:
    """``int_0^upper dg / gap(g)`` by adaptive quadrature.

    Raises :class:`IntegrandBlowup` if ``1/gap`` exceeds ``cap`` anywhere the
    quadrature samples, which signals a (near-)closing gap.
    """

    def integrand(x):
        d = gap(x)
        if not d > 0 or 1.0 / d > cap:
            raise IntegrandBlowup(f"inverse gap exceeds {cap:g} at g_bar = {x:.6g}")
        return 1.0 / d

    value, _ = quad(integrand, 0.0, upper, epsrel=epsrel, epsabs=0.0, limit=limit)
    return value


def preparation_time(params: ModelParams, g_bar_c: float, gap="ed",
                     opts: SolveOptions | None = None, cap: float = 1e8,
                     epsrel: float = 1e-6) -> float:
    """Probe preparation time ``T = int_0^{g_bar_c} d g_bar / Delta(g_bar)``.

    ``params`` is a template whose coupling is swept in barred units
    (``g2_bar`` or ``g1_bar``).  ``gap`` is one of

    * ``"ed"``: ED gap inside the ground state's conserved photon-parity
      sector, the only excitation an adiabatic ramp can reach (for linear
      coupling no sector is split off and this is ``E1 - E0``);
    * ``"ed_full"``: ED gap ``E1 - E0`` over all sectors;
    * ``"variational"``: the polaron gap;
    * a callable of ``g_bar``.
    """
    if callable(gap):
        gap_fn = gap
    elif gap in ("ed", "ed_full"):
        opts = opts or SolveOptions()
        attr = "sector_gap" if gap == "ed" else "gap"

        def gap_fn(x):
            return getattr(ground_state(params.with_g_bar(x), opts), attr)
    elif gap == "variational":
        def gap_fn(x):
            return variational_gap(params.with_g_bar(x))
    else:
        raise ParameterError(f"gap must be 'ed', 'ed_full', 'variational' or callable, got {gap!r}")
    return integrate_inverse_gap(gap_fn, g_bar_c, cap=cap, epsrel=epsrel)
