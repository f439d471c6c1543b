"""Two-Gaussian polaron ansatz for the quadratic (chi = 1) model.

Each spin component is a centred Gaussian ``phi_pm ~ exp(-xi_pm x^2 / 2)``
with its own frequency factor.  For fixed ``(xi_plus, xi_minus)`` the spin
amplitudes follow from a 2x2 eigenproblem whose lower branch ``E^-`` is
minimized over the two widths.

Energies here carry the ``+omega/2`` zero point of the position-space
oscillators; subtract ``omega/2`` before comparing with
:func:`nlrabi.model.ground_state`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import OptimizationFailed, ParameterError
from .model import ModelParams, derived_scales

LOG_XI_BOUNDS = (math.log(1e-6), math.log(1e2))


@dataclass(frozen=True)
class VariationalSolution:
    xi_plus: float
    xi_minus: float
    c_plus: float
    c_minus: float
    energy_minus: float
    energy_plus: float
    s_omega: float
    e_plus: float
    e_minus: float

    @property
    def gap(self) -> float:
        return self.energy_plus - self.energy_minus

    @property
    def overlap(self) -> float:
        """<phi_plus|phi_minus> of the two Gaussians."""
        xp, xm = self.xi_plus, self.xi_minus
        return (xp * xm) ** 0.25 * math.sqrt(2.0 / (xp + xm))

    @property
    def sigma_z(self) -> float:
        return self.c_plus ** 2 - self.c_minus ** 2

    @property
    def sigma_x(self) -> float:
        return 2.0 * self.c_plus * self.c_minus * self.overlap

    @property
    def x_squared(self) -> float:
        return 0.5 * (self.c_plus ** 2 / self.xi_plus + self.c_minus ** 2 / self.xi_minus)


def _check(params: ModelParams):
    if not params.is_quadratic or params.chi != 1.0:
        raise ParameterError(
            "the polaron functional is only available for the quadratic model with chi = 1")


def _terms(xp, xm, gb, params):
    w, eps = params.omega, params.epsilon
    et_p = (1.0 + gb + xp * xp) * w / (4.0 * xp) - eps
    et_m = (1.0 - gb + xm * xm) * w / (4.0 * xm) + eps
    s = (xp * xm) ** 0.25 * params.Omega / np.sqrt(2.0 * (xp + xm))
    return et_p, et_m, s


def ansatz_energy(xi_plus, xi_minus, params: ModelParams, branch: int = -1):
    """Branch energy ``E^eta = e_+ + eta sqrt(e_-^2 + S_Omega^2)``.

    Broadcasts over array-valued ``xi_plus``/``xi_minus``.
    """
    _check(params)
    if branch not in (-1, 1):
        raise ParameterError(f"branch must be +1 or -1, got {branch}")
    xp = np.asarray(xi_plus, dtype=float)
    xm = np.asarray(xi_minus, dtype=float)
    if np.any(xp <= 0) or np.any(xm <= 0):
        raise ParameterError("xi_plus and xi_minus must be positive")
    et_p, et_m, s = _terms(xp, xm, params.g / params.g_T, params)
    e_p, e_m = 0.5 * (et_p + et_m), 0.5 * (et_p - et_m)
    out = e_p + branch * np.sqrt(e_m * e_m + s * s)
    return float(out) if out.ndim == 0 else out


def _energy_u(u, gb, params):
    xp, xm = math.exp(u[0]), math.exp(u[1])
    et_p, et_m, s = _terms(xp, xm, gb, params)
    e_m = 0.5 * (et_p - et_m)
    return 0.5 * (et_p + et_m) - math.sqrt(e_m * e_m + s * s)


def _grad_u(u, gb, params):
    """Gradient of E^- with respect to ``(log xi_plus, log xi_minus)``."""
    w = params.omega
    xp, xm = math.exp(u[0]), math.exp(u[1])
    et_p, et_m, s = _terms(xp, xm, gb, params)
    e_m = 0.5 * (et_p - et_m)
    r = math.sqrt(e_m * e_m + s * s)
    d_p = 0.25 * w * (1.0 - (1.0 + gb) / (xp * xp))
    d_m = 0.25 * w * (1.0 - (1.0 - gb) / (xm * xm))
    inv = 1.0 / (2.0 * (xp + xm))
    ds_p = s * (0.25 / xp - inv)
    ds_m = s * (0.25 / xm - inv)
    g_p = 0.5 * d_p - (0.5 * e_m * d_p + s * ds_p) / r
    g_m = 0.5 * d_m - (-0.5 * e_m * d_m + s * ds_m) / r
    return np.array([xp * g_p, xm * g_m])


def _newton_polish(u, gb, params, max_iter=60):
    lo, hi = LOG_XI_BOUNDS
    g = _grad_u(u, gb, params)
    h = 1e-6
    for _ in range(max_iter):
        H = np.empty((2, 2))
        for j in range(2):
            du = np.zeros(2)
            du[j] = h
            H[:, j] = (_grad_u(u + du, gb, params) - _grad_u(u - du, gb, params)) / (2 * h)
        H = 0.5 * (H + H.T)
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            break
        if np.linalg.eigvalsh(H)[0] <= 0:
            break
        u_new = np.clip(u - step, lo, hi)
        g_new = _grad_u(u_new, gb, params)
        if np.linalg.norm(g_new) >= np.linalg.norm(g) and \
                _energy_u(u_new, gb, params) > _energy_u(u, gb, params):
            break
        u, g = u_new, g_new
        if np.max(np.abs(step)) < 1e-15:
            break
    return u, g


def _solution(xp, xm, params) -> VariationalSolution:
    et_p, et_m, s = _terms(xp, xm, params.g / params.g_T, params)
    s = float(s)
    e_p, e_m = 0.5 * (et_p + et_m), 0.5 * (et_p - et_m)
    r = math.hypot(e_m, s)
    if s == 0.0:
        # decoupled sectors; equal levels go to spin-down
        c_p, c_m = (-1.0, 0.0) if e_m < 0 else (0.0, 1.0)
    else:
        # e_- - R without cancellation when e_- > 0
        a = e_m - r if e_m <= 0 else -s * s / (e_m + r)
        norm = math.hypot(a, s)
        c_p, c_m = a / norm, s / norm
    return VariationalSolution(
        xi_plus=float(xp), xi_minus=float(xm), c_plus=c_p, c_minus=c_m,
        energy_minus=e_p - r, energy_plus=e_p + r, s_omega=s,
        e_plus=float(e_p), e_minus=float(e_m),
    )


def minimize_ansatz(params: ModelParams, start: tuple[float, float] | None = None,
                    local: bool = False) -> VariationalSolution:
    """Minimize ``E^-`` over ``(xi_plus, xi_minus)``.

    Bounded Nelder-Mead in log space from ``(varpi_plus, varpi_minus)`` and
    ``(1, 1)``, each finished by Newton steps on the analytic gradient.  With
    ``local=True`` only the Newton polish from ``start`` is run, which keeps
    neighbouring couplings on the same minimizer branch.
    """
    _check(params)
    scales = derived_scales(params)
    if params.Omega == 0.0:
        return _solution(scales.varpi_plus, scales.varpi_minus, params)

    gb = scales.g2_bar
    lo, hi = LOG_XI_BOUNDS
    scale = params.energy_scale
    starts = []
    if start is not None:
        starts.append(np.log(np.asarray(start, dtype=float)))
    if not local or start is None:
        starts += [np.log([scales.varpi_plus, scales.varpi_minus]), np.zeros(2)]

    best = None
    for u0 in starts:
        if local and start is not None:
            u = u0
        else:
            res = minimize(_energy_u, u0, args=(gb, params), method="Nelder-Mead",
                           bounds=[LOG_XI_BOUNDS, LOG_XI_BOUNDS],
                           options={"xatol": 1e-10, "fatol": 1e-14 * scale,
                                    "maxiter": 4000, "maxfev": 8000})
            u = res.x
        u, g = _newton_polish(np.asarray(u, dtype=float), gb, params)
        energy = _energy_u(u, gb, params)
        if best is None or energy < best[0]:
            best = (energy, u, g)

    energy, u, g = best
    at_bound = np.any(u <= lo + 1e-6) or np.any(u >= hi - 1e-6)
    if at_bound or not np.all(np.isfinite(u)):
        raise OptimizationFailed(f"no interior minimum (log xi = {u})")
    if np.linalg.norm(g) > 1e-7 * scale:
        raise OptimizationFailed(f"gradient {np.linalg.norm(g):.3e} did not vanish")
    return _solution(math.exp(u[0]), math.exp(u[1]), params)


def variational_gap(params: ModelParams) -> float:
    """``E^+ - E^-`` evaluated at the ``E^-`` minimizer."""
    sol = minimize_ansatz(params)
    return 2.0 * math.hypot(sol.e_minus, sol.s_omega)
