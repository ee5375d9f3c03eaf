"""
Floquet quasienergies of the driven well
========================================

In the oscillating barrier the wavefunction is expanded in sidebands
``n = -N..N``::

    sum_n sum_l (a_l e^{q_l x} + b_l e^{-q_l x}) J_{n-l}(alpha) e^{-i n omega t}

with ``alpha = V1 / (hbar omega)``. Matching at ``x = a`` and ``x = b``
couples the channels. The subband equations (``n != 0``) are solved for
``a_l, b_l`` in terms of ``a_0, b_0``; inserting the result into the
central-band equations gives eight reduction coefficients ``F1..F8`` and a
scalar equation for the quasienergy ``eps``::

    F4 (q0/k0) tan(k0 a) + F2
        = (F8 q0 + i F6 k0') / (F7 q0 - i F5 k0')
          * (F3 (q0/k0) tan(k0 a) - F1) * exp(-2 q0 (b - a))

Its complex roots are the Floquet quasienergies; ``Im eps < 0`` marks a
decaying (metastable) state.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError, PoleError
from .model import WellConfig, momenta_arrays, sin_over_k
from .numerics import RootFindSettings, bessel_jn_table, find_root, solve_linear

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Truncation:
    """Sideband count and numerical tolerances.

    ``branch`` selects the square-root branch of the outside wavenumbers
    ``k'_n``: ``"outgoing"`` (decaying closed channels, the default) or
    ``"principal"``.
    """

    N: int = 2
    residual_tol: float = 1e-10
    condition_warn: float = 1e12
    step_tol: float = 1e-12
    max_iters: int = 100
    finite_diff_scale: float = 1e-7
    branch: str = "outgoing"

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be a positive integer, got {self.N!r}")
        if self.branch not in ("outgoing", "principal"):
            raise DomainError(f"branch must be 'outgoing' or 'principal', got {self.branch!r}")

    @classmethod
    def for_config(cls, config: WellConfig, **kwargs) -> "Truncation":
        """Default sideband count ``max(2, ceil(alpha) + 1)``, which keeps ``N > alpha``."""
        kwargs.setdefault("N", max(2, math.ceil(config.alpha) + 1))
        return cls(**kwargs)

    @property
    def root_settings(self) -> RootFindSettings:
        return RootFindSettings(self.residual_tol, self.step_tol, self.max_iters, self.finite_diff_scale)

    @property
    def channels(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)


@dataclass(frozen=True)
class SubbandSolution:
    """Linear maps ``a_l = f_la a0 + f_lb b0`` and ``b_l = g_la a0 + g_lb b0`` for ``l != 0``."""

    channels: np.ndarray
    f_la: np.ndarray
    f_lb: np.ndarray
    g_la: np.ndarray
    g_lb: np.ndarray
    condition: float = 1.0

    def coefficients(self, a0: complex, b0: complex):
        """Subband amplitudes ``(a_l, b_l)`` implied by central amplitudes ``(a0, b0)``."""
        return self.f_la * a0 + self.f_lb * b0, self.g_la * a0 + self.g_lb * b0

    @classmethod
    def zeros(cls, N: int) -> "SubbandSolution":
        ls = np.array([l for l in range(-N, N + 1) if l != 0])
        z = np.zeros(len(ls), dtype=complex)
        return cls(ls, z, z.copy(), z.copy(), z.copy())


@dataclass(frozen=True)
class FCoefficients:
    F1: complex
    F2: complex
    F3: complex
    F4: complex
    F5: complex
    F6: complex
    F7: complex
    F8: complex
    alpha: float

    def as_tuple(self):
        return (self.F1, self.F2, self.F3, self.F4, self.F5, self.F6, self.F7, self.F8)


@dataclass(frozen=True)
class FloquetRoot:
    """A converged quasienergy with its full sideband coefficient table.

    ``epsilon`` is the first-zone representative. The quasienergy equation
    was solved with its central band at ``central_epsilon = epsilon +
    band_shift * hbar * omega``, so the retained channels, relative to
    ``epsilon``, are ``channels = band_shift - N .. band_shift + N``.
    ``A, a, b, t`` are indexed like ``channels`` and normalized so that the
    central band has ``b = 1``.
    """

    epsilon: complex
    omega: float
    config: WellConfig
    truncation: Truncation
    channels: np.ndarray = field(repr=False)
    A: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    t: np.ndarray = field(repr=False)
    residual: float = 0.0
    band_shift: int = 0

    @property
    def central_epsilon(self) -> complex:
        return self.epsilon + self.band_shift * self.config.photon

    @property
    def is_physical(self) -> bool:
        return self.epsilon.imag <= self.truncation.residual_tol

    @property
    def lifetime(self) -> float:
        im = -self.epsilon.imag
        return math.inf if im <= 0 else self.config.hbar / (2.0 * im)


def reduce_to_first_zone(epsilon: complex, omega: float, hbar: float = 1.0):
    """Shift ``epsilon`` by a whole number of quanta into ``0 <= Re < hbar omega``.

    Returns ``(eps0, n)`` with ``epsilon = eps0 + n hbar omega``.
    """
    if not omega > 0:
        raise DomainError(f"omega must be positive, got {omega!r}")
    eps = complex(epsilon)
    w = hbar * omega
    n = math.floor(eps.real / w)
    re = eps.real - n * w
    if re >= w:
        n += 1
        re = eps.real - n * w
    if re < 0.0:
        n -= 1
        re = eps.real - n * w
    return complex(re, eps.imag), n


# ---------------------------------------------------------------------------
# Subband elimination
# ---------------------------------------------------------------------------

class _Channels:
    """Per-channel quantities at one quasienergy, shared by the assembly routines."""

    def __init__(self, config: WellConfig, trunc: Truncation, epsilon: complex):
        self.ns = trunc.channels
        self.N = trunc.N
        self.k, self.q, self.kp = momenta_arrays(config, epsilon, self.ns, trunc.branch)
        self.J = bessel_jn_table(2 * trunc.N, config.alpha)  # J[m + 2N] = J_m
        a = config.a
        self.cos_ka = np.cos(self.k * a)
        self.sin_over_k = sin_over_k(self.k, a)
        self.sin_ka = np.sin(self.k * a)

    def bessel(self, m):
        return self.J[np.asarray(m) + 2 * self.N]


def subband_solve(config: WellConfig, trunc: Truncation, epsilon: complex) -> SubbandSolution:
    """Solve the ``n != 0`` matching equations for ``a_l, b_l`` in terms of ``a0, b0``.

    The ``4N x 4N`` system is assembled in rescaled unknowns
    ``u_l = a_l exp(q_l b)`` and ``v_l = b_l exp(-q_l a)`` so that no entry
    grows exponentially; the outer matching rows are multiplied by ``k'_n``,
    which removes the threshold singularity ``k'_n = 0``.
    """
    ch = _Channels(config, trunc, epsilon)
    if config.alpha == 0.0:
        return SubbandSolution.zeros(trunc.N)
    ns, q, kp, N = ch.ns, ch.q, ch.kp, trunc.N
    if np.any(np.abs(q) < 1e-12):
        raise DomainError(f"q_l vanishes in channel {int(ns[np.argmin(np.abs(q))])}")
    a, b = config.a, config.b
    sub = ns != 0
    ls = ns[sub]
    idx0 = N

    # A^{-/+}_{n,l} = cos(k_n a) -/+ q_l sin(k_n a)/k_n ; rows n, columns l
    cos_n = ch.cos_ka[:, None]
    sok_n = ch.sin_over_k[:, None]
    A_minus = cos_n - q[None, :] * sok_n
    A_plus = cos_n + q[None, :] * sok_n
    kB_plus = kp[:, None] + 1j * q[None, :]   # k'_n B^+_{n,l}
    kB_minus = kp[:, None] - 1j * q[None, :]  # k'_n B^-_{n,l}
    Jnl = ch.bessel(ns[:, None] - ns[None, :])
    damp = np.exp(-q * (b - a))

    rows = np.flatnonzero(sub)
    M = np.zeros((4 * N, 4 * N), dtype=complex)
    R = np.zeros((4 * N, 2), dtype=complex)
    for i, n in enumerate(rows):
        for j, l in enumerate(rows):
            w = Jnl[n, l]
            M[2 * i, 2 * j] = w * A_minus[n, l] * damp[l]
            M[2 * i, 2 * j + 1] = w * A_plus[n, l]
            M[2 * i + 1, 2 * j] = w * kB_plus[n, l]
            M[2 * i + 1, 2 * j + 1] = w * kB_minus[n, l] * damp[l]
        w0 = Jnl[n, idx0]
        q0 = q[idx0]
        R[2 * i, 0] = -w0 * A_minus[n, idx0] * cmath.exp(q0 * a)
        R[2 * i, 1] = -w0 * A_plus[n, idx0] * cmath.exp(-q0 * a)
        R[2 * i + 1, 0] = -w0 * kB_plus[n, idx0] * cmath.exp(q0 * b)
        R[2 * i + 1, 1] = -w0 * kB_minus[n, idx0] * cmath.exp(-q0 * b)

    # Row equilibration; does not change the solution.
    scale = np.max(np.abs(M), axis=1)
    scale[scale == 0] = 1.0
    M /= scale[:, None]
    R /= scale[:, None]
    X, cond = solve_linear(M, R, return_condition=True)
    if cond > trunc.condition_warn:
        logger.warning("subband system poorly conditioned (%.3e) at eps=%r", cond, epsilon)

    u, v = X[0::2, :], X[1::2, :]
    a_scale = np.exp(-q[sub] * b)[:, None]
    b_scale = np.exp(q[sub] * a)[:, None]
    f = u * a_scale
    g = v * b_scale
    return SubbandSolution(ls, f[:, 0], f[:, 1], g[:, 0], g[:, 1], cond)


def f_coefficients(config: WellConfig, trunc: Truncation, epsilon: complex,
                   sub: SubbandSolution) -> FCoefficients:
    """Reduction coefficients F1..F8 from a subband solution."""
    alpha = config.alpha
    k, q, kp = momenta_arrays(config, epsilon, sub.channels, trunc.branch)
    _, q0s, _ = momenta_arrays(config, epsilon, np.array([0]), trunc.branch)
    q0 = q0s[0]
    if q0 == 0:
        raise DomainError("q_0 vanishes (epsilon = V0)")
    J = bessel_jn_table(max(trunc.N, int(np.max(np.abs(sub.channels), initial=0))), alpha)
    Nj = (len(J) - 1) // 2
    J0 = J[Nj]
    Jml = J[-sub.channels + Nj]
    ratio = q / q0

    def at(x):
        ep, em = np.exp(q * x), np.exp(-q * x)
        e0p, e0m = cmath.exp(q0 * x), cmath.exp(-q0 * x)
        s1 = np.sum((sub.f_la * ep + sub.g_la * em) * Jml)
        s2 = np.sum((sub.f_lb * ep + sub.g_lb * em) * Jml)
        s3 = np.sum(ratio * (sub.f_la * ep - sub.g_la * em) * Jml)
        s4 = np.sum(ratio * (sub.f_lb * ep - sub.g_lb * em) * Jml)
        return J0 + e0m * s1, J0 + e0p * s2, J0 + e0m * s3, J0 - e0p * s4

    F1, F2, F3, F4 = at(config.a)
    F5, F6, F7, F8 = at(config.b)
    return FCoefficients(*(complex(v) for v in (F1, F2, F3, F4, F5, F6, F7, F8)), alpha=alpha)


def _central_terms(config: WellConfig, trunc: Truncation, epsilon: complex, F: FCoefficients):
    k0, q0, kp0 = (complex(v[0]) for v in momenta_arrays(config, epsilon, np.array([0]), trunc.branch))
    cos_ka = cmath.cos(k0 * config.a)
    if cos_ka == 0:
        raise PoleError("tan(k0 a) pole")
    t = q0 * complex(sin_over_k(k0, config.a)) / cos_ka
    num = F.F8 * q0 + 1j * F.F6 * kp0
    den = F.F7 * q0 - 1j * F.F5 * kp0
    if abs(den) <= 1e-12 * (abs(F.F7 * q0) + abs(F.F5 * kp0)):
        raise PoleError("vanishing denominator F7 q0 - i F5 k0'")
    return k0, q0, kp0, t, num, den


def floquet_residual(config: WellConfig, trunc: Truncation, epsilon: complex) -> complex:
    """LHS minus RHS of the quasienergy equation with its central band at ``epsilon``.

    No zone reduction is applied. Overflow anywhere raises
    ``FloatingPointError`` rather than returning a non-finite value.
    """
    with np.errstate(over="raise", invalid="raise", divide="raise", under="ignore"):
        sub = subband_solve(config, trunc, epsilon)
        F = f_coefficients(config, trunc, epsilon, sub)
        _, q0, _, t, num, den = _central_terms(config, trunc, epsilon, F)
        lhs = F.F4 * t + F.F2
        rhs = num / den * (F.F3 * t - F.F1) * cmath.exp(-2.0 * q0 * (config.b - config.a))
    return complex(lhs - rhs)


# ---------------------------------------------------------------------------
# Roots and coefficient tables
# ---------------------------------------------------------------------------

def _coefficient_table(config: WellConfig, trunc: Truncation, epsilon: complex):
    sub = subband_solve(config, trunc, epsilon)
    F = f_coefficients(config, trunc, epsilon, sub)
    _, q0, _, t, num, den = _central_terms(config, trunc, epsilon, F)
    a, b = config.a, config.b
    # Two equivalent expressions for a0 (b0 = 1); use the better-conditioned one.
    inner_den = F.F3 * t - F.F1
    inner_rel = abs(inner_den) / (abs(F.F3 * t) + abs(F.F1) + 1e-300)
    outer_rel = abs(den) / (abs(F.F7 * q0) + abs(F.F5) * abs(den - F.F7 * q0) + 1e-300)
    if inner_rel >= outer_rel and inner_den != 0:
        a0 = cmath.exp(-2.0 * q0 * a) * (F.F4 * t + F.F2) / inner_den
    else:
        a0 = cmath.exp(-2.0 * q0 * b) * num / den
    b0 = 1.0 + 0j
    a_sub, b_sub = sub.coefficients(a0, b0)

    ch = _Channels(config, trunc, epsilon)
    ns, N = ch.ns, trunc.N
    a_all = np.zeros(len(ns), dtype=complex)
    b_all = np.zeros(len(ns), dtype=complex)
    a_all[ns != 0], b_all[ns != 0] = a_sub, b_sub
    a_all[N], b_all[N] = a0, b0

    q, k, kp = ch.q, ch.k, ch.kp
    Jnl = ch.bessel(ns[:, None] - ns[None, :])
    S1 = Jnl @ (a_all * np.exp(q * a) + b_all * np.exp(-q * a))
    S2 = Jnl @ (q * (a_all * np.exp(q * a) - b_all * np.exp(-q * a)))
    S3 = Jnl @ (a_all * np.exp(q * b) + b_all * np.exp(-q * b))
    k_cos = k * ch.cos_ka
    use_sin = np.abs(ch.sin_ka) >= np.abs(k_cos)
    with np.errstate(divide="ignore", invalid="ignore"):
        A_all = np.where(use_sin, S1 / ch.sin_ka, S2 / k_cos)
    t_all = np.exp(-1j * kp * b) * S3
    return ns, A_all, a_all, b_all, t_all


def build_root(config: WellConfig, trunc: Truncation, central_epsilon: complex) -> FloquetRoot:
    """Package a converged quasienergy (central-band value) with its coefficient table."""
    ns, A, a, b, t = _coefficient_table(config, trunc, central_epsilon)
    res = abs(floquet_residual(config, trunc, central_epsilon))
    eps0, shift = reduce_to_first_zone(central_epsilon, config.omega, config.hbar)
    return FloquetRoot(epsilon=eps0, omega=config.omega, config=config, truncation=trunc,
                       channels=ns + shift, A=A, a=a, b=b, t=t, residual=res, band_shift=shift)


def root_residual(root: FloquetRoot) -> float:
    """``|floquet_residual|`` re-evaluated at a root's central band."""
    return abs(floquet_residual(root.config, root.truncation, root.central_epsilon))


def solve_floquet(config: WellConfig, trunc: Truncation, guess: complex,
                  band_shift: int = 0) -> FloquetRoot:
    """Polish a quasienergy from ``guess`` and reduce it to the first Floquet zone.

    The central band of the truncated equation is placed at ``guess +
    band_shift * hbar * omega``, so sidebands ``-N..N`` are counted from
    there. A state is represented best when its dominant channel (for a
    branch grown out of a static level ``E``, the one near ``E``) is the
    central band; any guess ``E + n hbar omega`` with ``band_shift = -n``
    does that. The returned root is the same physical state either way,
    shifted into ``0 <= Re(eps) < hbar omega``.

    Raises
    ------
    ConvergenceError
        If the root finder fails.
    """
    if not config.omega > 0:
        raise DomainError("solve_floquet needs omega > 0")
    centre = complex(guess) + band_shift * config.photon
    root = find_root(lambda e: floquet_residual(config, trunc, e), centre, trunc.root_settings)
    out = build_root(config, trunc, root)
    if not out.is_physical:
        logger.warning("unphysical root with Im(eps) = %.3e > 0", root.imag)
    return out


# ---------------------------------------------------------------------------
# Verification helpers
# ---------------------------------------------------------------------------

def subband_equations_residual(config: WellConfig, trunc: Truncation, epsilon: complex,
                               sub: SubbandSolution, a0: complex = 1.0, b0: complex = 0.0) -> float:
    """Relative residual of the unscaled ``n != 0`` equations for given ``(a0, b0)``."""
    ch = _Channels(config, trunc, epsilon)
    ns, q, kp, N = ch.ns, ch.q, ch.kp, trunc.N
    a, b = config.a, config.b
    a_all = np.zeros(len(ns), dtype=complex)
    b_all = np.zeros(len(ns), dtype=complex)
    a_all[ns != 0], b_all[ns != 0] = sub.coefficients(a0, b0)
    a_all[N], b_all[N] = a0, b0
    Jnl = ch.bessel(ns[:, None] - ns[None, :])
    A_minus = ch.cos_ka[:, None] - q[None, :] * ch.sin_over_k[:, None]
    A_plus = ch.cos_ka[:, None] + q[None, :] * ch.sin_over_k[:, None]
    B_plus = 1 + 1j * q[None, :] / kp[:, None]
    B_minus = 1 - 1j * q[None, :] / kp[:, None]
    t1 = Jnl * (A_minus * (np.exp(q * a) * a_all)[None, :] + A_plus * (np.exp(-q * a) * b_all)[None, :])
    t2 = Jnl * (B_plus * (np.exp(q * b) * a_all)[None, :] + B_minus * (np.exp(-q * b) * b_all)[None, :])
    worst = 0.0
    for terms in (t1, t2):
        for n in np.flatnonzero(ns != 0):
            scale = np.sum(np.abs(terms[n])) or 1.0
            worst = max(worst, abs(np.sum(terms[n])) / scale)
    return worst


def matching_residuals(root: FloquetRoot) -> np.ndarray:
    """Relative mismatch of the four interface conditions, shape ``(4, 2N + 1)``.

    Rows: value at ``a``, derivative at ``a``, value at ``b``, derivative at ``b``.
    """
    cfg, trunc = root.config, root.truncation
    ch = _Channels(cfg, trunc, root.central_epsilon)
    ns, q, k, kp = ch.ns, ch.q, ch.k, ch.kp
    a, b = cfg.a, cfg.b
    Jnl = ch.bessel(ns[:, None] - ns[None, :])
    out = np.zeros((4, len(ns)))

    def rel(lhs, terms):
        scale = np.maximum(np.sum(np.abs(terms), axis=1), np.abs(lhs))
        scale[scale == 0] = 1.0
        return np.abs(lhs - np.sum(terms, axis=1)) / scale

    ea_p, ea_m = np.exp(q * a) * root.a, np.exp(-q * a) * root.b
    eb_p, eb_m = np.exp(q * b) * root.a, np.exp(-q * b) * root.b
    out[0] = rel(root.A * ch.sin_ka, Jnl * (ea_p + ea_m)[None, :])
    out[1] = rel(k * root.A * ch.cos_ka, Jnl * (q * (ea_p - ea_m))[None, :])
    out[2] = rel(root.t * np.exp(1j * kp * b), Jnl * (eb_p + eb_m)[None, :])
    out[3] = rel(1j * kp * root.t * np.exp(1j * kp * b), Jnl * (q * (eb_p - eb_m))[None, :])
    return out
