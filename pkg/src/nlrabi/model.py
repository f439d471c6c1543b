"""Truncated spin-boson Hamiltonians and exact diagonalization.

The Hilbert space is spanned by ``|sigma_z> (x) |n>`` with ``sigma_z = +, -``
and Fock states ``n = 0 .. n_max-1``.  State vectors are laid out spin-major,
so ``coefficients.reshape(2, n_max)`` gives the spin-up row followed by the
spin-down row.

Quadratic coupling::

    H = w a^+a + (W/2) sx + g2 sz [(a^+)^2 + a^2 + chi (2 a^+a + 1)] - eps sz

Linear coupling::

    H = w a^+a + (W/2) sx + g1 sz (a^+ + a) - eps sz
"""
from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from .errors import CollapseError, NotConverged, ParameterError


class Coupling(str, enum.Enum):
    QUADRATIC = "quadratic"
    LINEAR = "linear"


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of one Rabi-type model.

    ``g`` is the dimensionful coupling: ``g2`` for the quadratic model and
    ``g1`` for the linear one.  ``chi`` is ignored by the linear model.
    """

    omega: float = 1.0
    Omega: float = 0.0
    epsilon: float = 0.0
    chi: float = 1.0
    g: float = 0.0
    coupling: Coupling = Coupling.QUADRATIC

    def __post_init__(self):
        object.__setattr__(self, "coupling", Coupling(self.coupling))
        for name in ("omega", "Omega", "epsilon", "chi", "g"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value!r}")
        if self.omega <= 0:
            raise ParameterError(f"omega must be positive, got {self.omega}")
        if self.Omega < 0:
            raise ParameterError(f"Omega must be non-negative, got {self.Omega}")
        if not 0.0 <= self.chi <= 1.0:
            raise ParameterError(f"chi must lie in [0, 1], got {self.chi}")
        if self.coupling is Coupling.QUADRATIC and abs(self.g) >= self.g_T:
            raise CollapseError(
                f"g2_bar = {self.g / self.g_T:.6g} is at or beyond the spectral collapse point"
            )

    @classmethod
    def quadratic(cls, g2_bar=0.0, *, omega=1.0, Omega=0.0, epsilon=0.0, chi=1.0):
        g_T = omega / (2.0 * (1.0 + chi))
        return cls(omega=omega, Omega=Omega, epsilon=epsilon, chi=chi, g=g2_bar * g_T)

    @classmethod
    def linear(cls, g1_bar=0.0, *, omega=1.0, Omega=1.0, epsilon=0.0):
        g_c = math.sqrt(omega * Omega) / 2.0
        return cls(omega=omega, Omega=Omega, epsilon=epsilon, g=g1_bar * g_c,
                   coupling=Coupling.LINEAR)

    @property
    def is_quadratic(self) -> bool:
        return self.coupling is Coupling.QUADRATIC

    @property
    def g_T(self) -> float:
        """Spectral collapse coupling of the quadratic model."""
        return self.omega / (2.0 * (1.0 + self.chi))

    @property
    def g_c(self) -> float:
        """Critical coupling of the linear model, sqrt(omega*Omega)/2."""
        return math.sqrt(self.omega * self.Omega) / 2.0

    @property
    def g_scale(self) -> float:
        """Natural coupling scale: g_T (quadratic) or g_c (linear)."""
        return self.g_T if self.is_quadratic else self.g_c

    @property
    def g_bar(self) -> float:
        scale = self.g_scale
        if scale == 0:
            raise ParameterError("linear coupling scale g_c vanishes for Omega = 0")
        return self.g / scale

    @property
    def energy_scale(self) -> float:
        return max(self.omega, self.Omega)

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def with_g_bar(self, g_bar: float) -> "ModelParams":
        return self.replace(g=g_bar * self.g_scale)


@dataclass(frozen=True)
class DerivedScales:
    g_T: float
    chi_tilde: float
    g2_bar: float
    m_plus: float
    m_minus: float
    varpi_plus: float
    varpi_minus: float
    w_plus: float
    w_minus: float
    w2: float


def derived_scales(params: ModelParams) -> DerivedScales:
    """Effective masses and renormalized frequencies of the quadratic model."""
    if not params.is_quadratic:
        raise ParameterError("derived scales are defined for the quadratic coupling only")
    g_T = params.g_T
    chi_t = (1.0 - params.chi) / (1.0 + params.chi)
    gb = params.g / g_T
    w_p, w_m = math.sqrt(1.0 + gb), math.sqrt(1.0 - gb)
    return DerivedScales(
        g_T=g_T,
        chi_tilde=chi_t,
        g2_bar=gb,
        m_plus=1.0 / (1.0 - chi_t * gb),
        m_minus=1.0 / (1.0 + chi_t * gb),
        varpi_plus=math.sqrt((1.0 + gb) * (1.0 - chi_t * gb)),
        varpi_minus=math.sqrt((1.0 - gb) * (1.0 + chi_t * gb)),
        w_plus=w_p,
        w_minus=w_m,
        w2=w_p * w_m,
    )


def build_hamiltonian(params: ModelParams, n_max: int) -> sp.csr_matrix:
    """Sparse real-symmetric Hamiltonian of dimension ``2*n_max``."""
    if n_max < 4:
        raise ParameterError(f"n_max must be at least 4, got {n_max}")
    n = np.arange(n_max, dtype=float)
    eye = sp.identity(n_max, format="csr")
    number = sp.diags(n)
    if params.is_quadratic:
        # (a^+)^2 + a^2 built directly in the truncated space
        pair = np.sqrt(n[:-2] + 1.0) * np.sqrt(n[:-2] + 2.0)
        coupling_op = sp.diags([pair, pair], [-2, 2]) + params.chi * sp.diags(2.0 * n + 1.0)
    else:
        hop = np.sqrt(n[1:])
        coupling_op = sp.diags([hop, hop], [-1, 1])
    boson = params.omega * number
    up = boson + params.g * coupling_op - params.epsilon * eye
    down = boson - params.g * coupling_op + params.epsilon * eye
    flip = 0.5 * params.Omega * eye
    H = sp.bmat([[up, flip], [flip, down]], format="csr")
    # bmat sums exactly-symmetric blocks, so H == H.T bit for bit
    return H


@dataclass(frozen=True)
class SolveOptions:
    """Truncation and eigensolver controls for :func:`ground_state`.

    ``energy_tol`` defaults to ``1e-10 * max(Omega, omega)``.  With ``strict``
    the solver raises :class:`NotConverged` at the cap, otherwise it returns
    the last state flagged ``converged=False``.
    """

    n_start: int = 64
    growth: float = 2.0
    energy_tol: float | None = None
    n_cap: int = 16384
    tail_sigmas: float = 6.0
    dense_limit: int = 1024
    strict: bool = True

    def tolerance(self, params: ModelParams) -> float:
        if self.energy_tol is not None:
            return self.energy_tol
        return 1e-10 * params.energy_scale


@dataclass(frozen=True)
class GroundState:
    """Lowest eigenpair.  ``gap`` is ``E1 - E0`` over the whole spectrum;
    ``sector_gap`` is measured inside the ground state's photon-parity sector
    (equal to ``gap`` for linear coupling)."""

    energy: float
    gap: float
    sector_gap: float
    coefficients: np.ndarray = field(repr=False)
    n_max: int
    converged: bool
    params: ModelParams

    @property
    def components(self) -> np.ndarray:
        """Coefficients as a ``(2, n_max)`` array: spin-up row, spin-down row."""
        return self.coefficients.reshape(2, self.n_max)

    def photon_distribution(self) -> np.ndarray:
        return (self.components ** 2).sum(axis=0)

    def photon_moments(self) -> tuple[float, float]:
        p = self.photon_distribution()
        n = np.arange(self.n_max)
        mean = float(p @ n)
        var = max(float(p @ n ** 2) - mean ** 2, 0.0)
        return mean, math.sqrt(var)

    def padded(self, n_max: int) -> np.ndarray:
        """Coefficient vector zero-padded to a larger truncation."""
        if n_max < self.n_max:
            raise ValueError("cannot pad to a smaller truncation")
        out = np.zeros((2, n_max))
        out[:, : self.n_max] = self.components
        return out.ravel()


@dataclass
class _Spectrum:
    energies: np.ndarray
    ground: np.ndarray
    n_max: int
    sector_gap: float = math.nan


def _sector_indices(params: ModelParams, n_max: int) -> list[np.ndarray]:
    full = np.arange(2 * n_max)
    if not params.is_quadratic:
        return [full]
    fock = full % n_max
    # quadratic coupling conserves photon parity
    return [full[fock % 2 == 0], full[fock % 2 == 1]]


def _lowest_eigpairs(H, k, guess, dense_limit, scale):
    dim = H.shape[0]
    k = min(k, dim)
    if dim <= dense_limit or k >= dim - 1:
        vals, vecs = scipy.linalg.eigh(H.toarray(), subset_by_index=[0, k - 1])
        return vals, vecs
    if guess is None:
        vals, vecs = eigsh(H, k=k, which="SA", tol=0)
    else:
        vals, vecs = eigsh(H.tocsc(), k=k, sigma=guess - 1e-2 * scale, which="LM", tol=0)
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


def _gauge_fix(vec: np.ndarray) -> np.ndarray:
    vec = vec / np.linalg.norm(vec)
    if vec[np.argmax(np.abs(vec))] < 0:
        vec = -vec
    return vec


def _solve_fixed(params, n_max, k, guess=None, dense_limit=1024) -> _Spectrum:
    H = build_hamiltonian(params, n_max)
    scale = params.energy_scale
    vals_all, vecs_all, sector_gaps = [], [], []
    for idx in _sector_indices(params, n_max):
        sub = H[idx][:, idx]
        vals, vecs = _lowest_eigpairs(sub, k, guess, dense_limit, scale)
        sector_gaps.append((vals[0], vals[1] - vals[0] if len(vals) > 1 else math.nan))
        for j in range(len(vals)):
            full = np.zeros(2 * n_max)
            full[idx] = vecs[:, j]
            vals_all.append(vals[j])
            vecs_all.append(full)
    order = np.argsort(vals_all, kind="stable")
    energies = np.asarray(vals_all)[order]
    vecs = [vecs_all[i] for i in order]

    degenerate = [v for e, v in zip(energies, vecs) if e - energies[0] <= 1e-12 * scale]
    if len(degenerate) > 1:
        # tie-break: the combination with the largest spin-down weight
        V = np.column_stack(degenerate)
        down = V[n_max:, :]
        _, a = np.linalg.eigh(down.T @ down)
        ground = V @ a[:, -1]
    else:
        ground = vecs[0]
    sector_gap = min(sector_gaps)[1]
    return _Spectrum(energies=energies[:k], ground=_gauge_fix(ground), n_max=n_max,
                     sector_gap=max(float(sector_gap), 0.0))


def _make_state(params, spec: _Spectrum, converged: bool) -> GroundState:
    gap = float(spec.energies[1] - spec.energies[0]) if len(spec.energies) > 1 else float("nan")
    return GroundState(
        energy=float(spec.energies[0]),
        gap=max(gap, 0.0),
        sector_gap=spec.sector_gap,
        coefficients=spec.ground,
        n_max=spec.n_max,
        converged=converged,
        params=params,
    )


def _tail_ok(state: GroundState, sigmas: float) -> bool:
    mean, std = state.photon_moments()
    return mean + sigmas * std < state.n_max


def _next_size(n: int, growth: float) -> int:
    m = max(int(round(n * growth)), n + 2)
    return m + (m % 2)


def _adaptive(params: ModelParams, k: int, opts: SolveOptions):
    tol = opts.tolerance(params)
    n = opts.n_start + (opts.n_start % 2)
    prev = _solve_fixed(params, n, k, dense_limit=opts.dense_limit)
    while True:
        n_next = _next_size(n, opts.growth)
        if n_next > opts.n_cap:
            return prev, False
        cur = _solve_fixed(params, n_next, k, guess=prev.energies[0],
                           dense_limit=opts.dense_limit)
        m = min(len(cur.energies), len(prev.energies))
        stable = np.all(np.abs(cur.energies[:m] - prev.energies[:m]) < tol)
        if stable and _tail_ok(_make_state(params, cur, True), opts.tail_sigmas):
            return cur, True
        prev, n = cur, n_next


def ground_state(params: ModelParams, opts: SolveOptions | None = None, *,
                 n_max: int | None = None, guess: float | None = None) -> GroundState:
    """Lowest eigenpair and gap with adaptive Fock truncation.

    Passing ``n_max`` skips the truncation search and diagonalizes at that
    size directly; the result is then flagged converged only if the photon
    tail criterion holds.
    """
    opts = opts or SolveOptions()
    if n_max is not None:
        spec = _solve_fixed(params, n_max, 2, guess=guess, dense_limit=opts.dense_limit)
        state = _make_state(params, spec, True)
        return dataclasses.replace(state, converged=_tail_ok(state, opts.tail_sigmas))
    spec, ok = _adaptive(params, 2, opts)
    state = _make_state(params, spec, ok)
    if not ok and opts.strict:
        raise NotConverged(
            f"ground state not converged at n_max={spec.n_max} (cap {opts.n_cap})", state)
    return state


def low_spectrum(params: ModelParams, k: int, opts: SolveOptions | None = None) -> list[float]:
    """The ``k`` lowest eigenvalues, converged under the same truncation policy."""
    if k < 2:
        raise ParameterError(f"k must be at least 2, got {k}")
    opts = opts or SolveOptions()
    spec, ok = _adaptive(params, k, opts)
    if not ok and opts.strict:
        raise NotConverged(f"spectrum not converged at n_max={spec.n_max}",
                           _make_state(params, spec, False))
    return [float(e) for e in spec.energies[:k]]
