"""Expectation values and position-space wavefunctions of ED ground states."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .errors import ParameterError
from .model import GroundState, derived_scales


@dataclass(frozen=True)
class WavefunctionGrid:
    x: np.ndarray
    psi_plus: np.ndarray
    psi_minus: np.ndarray

    def norm(self) -> float:
        return float(trapezoid(self.psi_plus ** 2 + self.psi_minus ** 2, self.x))

    def x_squared(self) -> float:
        return float(trapezoid(self.x ** 2 * (self.psi_plus ** 2 + self.psi_minus ** 2), self.x))

    def width(self, component: str) -> float:
        """RMS width of one spin component (normalized to its own weight)."""
        psi = self.psi_plus if component == "plus" else self.psi_minus
        weight = trapezoid(psi ** 2, self.x)
        return float(math.sqrt(trapezoid(self.x ** 2 * psi ** 2, self.x) / weight))


def spin_expectation(gs: GroundState, axis: str = "z") -> float:
    up, down = gs.components
    if axis == "z":
        return float(up @ up - down @ down)
    if axis == "x":
        return float(2.0 * (up @ down))
    if axis == "y":
        # real coefficients: <sigma_y> = 2 Im(c_up* c_down) = 0
        return 0.0
    raise ParameterError(f"axis must be one of 'x', 'y', 'z', got {axis!r}")


def x_squared(gs: GroundState) -> float:
    """``<x^2> = <(a^+ + a)^2> / 2`` evaluated in the truncated space."""
    n = np.arange(gs.n_max, dtype=float)
    pair = np.sqrt((n[:-2] + 1.0) * (n[:-2] + 2.0))
    total = 0.0
    for c in gs.components:
        total += (2.0 * n + 1.0) @ (c * c) + 2.0 * pair @ (c[:-2] * c[2:])
    return float(0.5 * total)


def default_grid(gs: GroundState, points: int = 1024) -> np.ndarray:
    """Symmetric grid wide enough for the broadened spin-down component."""
    if gs.params.is_quadratic:
        varpi = derived_scales(gs.params).varpi_minus
        half = max(6.0, 6.0 / math.sqrt(varpi))
    else:
        half = max(6.0, 8.0 * math.sqrt(x_squared(gs)))
    return np.linspace(-half, half, max(points, 512))


def hermite_sum(coefficients: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``sum_n c_n phi_n(x)`` over normalized Hermite functions.

    Uses the normalized three-term recurrence with a running per-point
    exponent so neither the Gaussian factor nor the polynomial growth
    under/overflows at large ``n`` or ``|x|``.
    """
    x = np.asarray(x, dtype=float)
    log_scale = -0.5 * x * x
    prev = np.zeros_like(x)
    cur = np.full_like(x, math.pi ** -0.25)
    acc = coefficients[0] * cur
    for n in range(1, len(coefficients)):
        nxt = math.sqrt(2.0 / n) * x * cur - math.sqrt((n - 1) / n) * prev
        prev, cur = cur, nxt
        acc = acc + coefficients[n] * cur
        big = np.abs(cur) > 1e150
        if np.any(big):
            f = np.where(big, np.abs(cur), 1.0)
            prev, cur, acc = prev / f, cur / f, acc / f
            log_scale = log_scale + np.log(f)
    with np.errstate(under="ignore"):
        return acc * np.exp(log_scale)


def wavefunction(gs: GroundState, x_grid=None) -> WavefunctionGrid:
    """Spin-resolved position amplitudes ``psi_pm(x)`` (``pm`` = sigma_z)."""
    x = default_grid(gs) if x_grid is None else np.asarray(x_grid, dtype=float)
    up, down = gs.components
    return WavefunctionGrid(x=x, psi_plus=hermite_sum(up, x), psi_minus=hermite_sum(down, x))
