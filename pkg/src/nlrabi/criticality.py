"""Closed-form level structure of the quadratic model in position space.

Each spin component sees a harmonic well ``v_pm(x) = (w/2) m_pm varpi_pm^2 x^2 -+ eps``.
The ground-state transition under finite bias is the crossing of the two
bias-shifted oscillator levels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import CollapseError, NegativeRadicand, NoTransition, ParameterError
from .model import ModelParams


@dataclass(frozen=True)
class LevelPair:
    eps0_plus: float
    eps0_minus: float
    eps_plus: float
    eps_minus: float
    n: int


def _require_quadratic(params: ModelParams):
    if not params.is_quadratic:
        raise ParameterError("only defined for the quadratic coupling")


def potentials(params: ModelParams, x, g2_bar: float | None = None):
    """Spin-resolved potentials ``(v_plus, v_minus)`` at position(s) ``x``.

    ``g2_bar`` overrides the coupling stored in ``params``; unlike
    :class:`ModelParams` it may equal 1, where the spin-down well is flat.
    """
    _require_quadratic(params)
    gb = params.g / params.g_T if g2_bar is None else float(g2_bar)
    if not -1.0 <= gb <= 1.0:
        raise CollapseError(f"g2_bar must lie in [-1, 1], got {gb}")
    x = np.asarray(x, dtype=float)
    # m_pm * varpi_pm^2 = 1 +- g2_bar for every chi
    v_plus = 0.5 * params.omega * (1.0 + gb) * x ** 2 - params.epsilon
    v_minus = 0.5 * params.omega * (1.0 - gb) * x ** 2 + params.epsilon
    if v_plus.ndim == 0:
        return float(v_plus), float(v_minus)
    return v_plus, v_minus


def level_energies(g2_bar, chi: float, omega: float = 1.0, n: int = 0):
    """Vectorized ``(eps0_plus, eps0_minus)`` over a grid of ``g2_bar``."""
    gb = np.asarray(g2_bar, dtype=float)
    if np.any(np.abs(gb) >= 1.0):
        raise CollapseError("level formula requires |g2_bar| < 1")
    chi_t = (1.0 - chi) / (1.0 + chi)
    base = 1.0 - chi_t * gb ** 2
    lin = (1.0 - chi_t) * gb
    pref = omega * (n + 0.5)
    return pref * np.sqrt(base + lin), pref * np.sqrt(base - lin)


def single_particle_levels(params: ModelParams, n: int = 0) -> LevelPair:
    _require_quadratic(params)
    if n < 0:
        raise ParameterError(f"n must be non-negative, got {n}")
    gb = params.g / params.g_T
    e_plus, e_minus = level_energies(gb, params.chi, params.omega, n)
    half = 0.5 * params.omega
    return LevelPair(
        eps0_plus=float(e_plus),
        eps0_minus=float(e_minus),
        eps_plus=float(e_plus) - params.epsilon - half,
        eps_minus=float(e_minus) + params.epsilon - half,
        n=n,
    )


def optimal_bias(g2: float, params: ModelParams) -> float:
    """Bias that puts the level crossing at coupling ``g2`` (chi = 1 form)."""
    _require_quadratic(params)
    gb = g2 / params.g_T
    if not 0.0 <= gb <= 1.0:
        raise ParameterError(f"g2_bar must lie in [0, 1], got {gb}")
    return 0.25 * params.omega * (math.sqrt(1.0 + gb) - math.sqrt(1.0 - gb))


def transition_coupling(epsilon: float, params: ModelParams) -> float:
    """Coupling ``g2c`` at which the ground state switches spin sector.

    For ``chi = 1`` this is the closed form
    ``g2c = 4 sqrt((eps/w)^2 - 4 (eps/w)^4) g_T``; otherwise the crossing of
    the bias-shifted ``n = 0`` levels is located by root finding.
    """
    _require_quadratic(params)
    e = epsilon / params.omega
    if e < 0.0:
        # spin-down is favoured at every coupling
        raise NoTransition(f"no level crossing for negative bias eps = {epsilon}")
    if params.chi == 1.0:
        if e > 0.5:
            raise NegativeRadicand(f"eps/omega = {e} exceeds 1/2")
        if e > math.sqrt(2.0) / 4.0:
            # formula still evaluates, but on the spurious large-bias branch
            raise NoTransition(
                f"eps/omega = {e} exceeds the largest crossing bias sqrt(2)/4")
        return 4.0 * math.sqrt(e * e - 4.0 * e ** 4) * params.g_T
    if epsilon == 0.0:
        return 0.0

    def split(gb):
        e_p, e_m = level_energies(gb, params.chi, params.omega)
        return float(e_p - e_m) - 2.0 * epsilon

    hi = 1.0 - 1e-15
    if split(0.0) * split(hi) > 0:
        raise NoTransition(f"no level crossing for chi = {params.chi}, eps = {epsilon}")
    return brentq(split, 0.0, hi, xtol=1e-15, rtol=1e-15) * params.g_T
