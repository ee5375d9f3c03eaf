"""
Wavefunctions, densities and survival in the well
==================================================

A Floquet state is ``Psi(x, t) = exp(-i eps t / hbar) Phi(x, t)`` with

    Phi(x, t) = sum_n phi_n(x) exp(-i n omega t)

and channel functions

    phi_n(x) = A_n sin(k_n x)                                  0 <= x < a
             = sum_l J_{n-l}(alpha) (a_l e^{q_l x} + b_l e^{-q_l x})   a <= x <= b
             = t_n exp(i k'_n x)                               x > b

Here ``eps`` and the channel index ``n`` are counted from the central band
the root was solved in; this is the same function of ``(x, t)`` as the
first-zone labelling.

Integrals over ``[0, b]`` use composite Simpson on a uniform grid in each
of the two regions. The in-well norm ``int_0^b |Phi|^2 dx`` is a Hermitian
form in the phases ``exp(-i n omega t)``, so its time dependence is
evaluated through the Gram matrix of the ``phi_n`` instead of re-sampling
the wavefunction at every time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .errors import DomainError
from .floquet import FloquetRoot, _Channels
from .numerics import periodic_average

DEFAULT_POINTS = 513


@dataclass(frozen=True)
class DensityProfile:
    """``|Psi(x, t)|^2`` on a grid, divided by the ``t = 0`` norm on ``[0, b]``."""

    x_grid: np.ndarray
    t: float
    values: np.ndarray
    normalization_stamp: float


@dataclass(frozen=True)
class NondecayCurve:
    t_grid: np.ndarray
    p_values: np.ndarray
    p_bar_values: np.ndarray
    h_mean: float
    im_epsilon: float


def channel_functions(root: FloquetRoot, x) -> np.ndarray:
    """Channel functions ``phi_n(x)``, shape ``(2N + 1, len(x))``.

    Rows follow ``root.truncation.channels`` (central-band labelling).
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs < 0) or not np.all(np.isfinite(xs)):
        raise DomainError("x must be finite and non-negative")
    cfg = root.config
    ch = _Channels(cfg, root.truncation, root.central_epsilon)
    ns = ch.ns
    out = np.zeros((len(ns), len(xs)), dtype=complex)

    well = xs < cfg.a
    barrier = (xs >= cfg.a) & (xs <= cfg.b)
    outside = xs > cfg.b
    if np.any(well):
        out[:, well] = root.A[:, None] * np.sin(np.outer(ch.k, xs[well]))
    if np.any(barrier):
        xb = xs[barrier]
        q = ch.q[:, None]
        layer = root.a[:, None] * np.exp(q * xb) + root.b[:, None] * np.exp(-q * xb)
        J = ch.bessel(ns[:, None] - ns[None, :])
        out[:, barrier] = J @ layer
    if np.any(outside):
        out[:, outside] = root.t[:, None] * np.exp(1j * np.outer(ch.kp, xs[outside]))
    return out


def _phases(root: FloquetRoot, t: float) -> np.ndarray:
    return np.exp(-1j * root.truncation.channels * root.omega * t)


def assemble_wavefunction(root: FloquetRoot, x: float, t: float) -> complex:
    """``Psi(x, t)`` of a converged root (unnormalized, central band ``b_0 = 1``)."""
    phi = channel_functions(root, x)[:, 0]
    envelope = np.exp(-1j * root.central_epsilon * t / root.config.hbar)
    return complex(envelope * np.dot(_phases(root, t), phi))


def _region_grids(root: FloquetRoot, points: int):
    if points < 3 or points % 2 == 0:
        raise DomainError(f"points per region must be odd and >= 3, got {points}")
    cfg = root.config
    # The well grid stops just short of a so the sine branch is used throughout;
    # the endpoint value is continuous, so this only moves it by rounding.
    x_well = np.linspace(0.0, cfg.a, points)
    x_well[-1] = np.nextafter(cfg.a, 0.0)
    x_barrier = np.linspace(cfg.a, cfg.b, points)
    return x_well, x_barrier


def gram_matrix(root: FloquetRoot, points: int = DEFAULT_POINTS) -> np.ndarray:
    """``G[n, m] = int_0^b conj(phi_n) phi_m dx`` by Simpson on each region."""
    G = 0
    for xs in _region_grids(root, points):
        phi = channel_functions(root, xs)
        integrand = np.conj(phi)[:, None, :] * phi[None, :, :]
        G = G + simpson(integrand, x=xs, axis=-1)
    return G


def _norm(G: np.ndarray, c: np.ndarray) -> float:
    return float(np.real(np.conj(c) @ G @ c))


def _h_values(root: FloquetRoot, G: np.ndarray, times) -> np.ndarray:
    base = _norm(G, _phases(root, 0.0))
    if not base > 0:
        raise DomainError("wavefunction has zero norm on [0, b]")
    return np.array([_norm(G, _phases(root, t)) / base for t in times])


def periodic_factor(root: FloquetRoot, t: float, points: int = DEFAULT_POINTS) -> float:
    """``h(t) = int_0^b |Phi(x, t)|^2 dx / int_0^b |Phi(x, 0)|^2 dx``."""
    return float(_h_values(root, gram_matrix(root, points), [t])[0])


def density_profile(root: FloquetRoot, x_grid, t: float,
                    points: int = DEFAULT_POINTS) -> DensityProfile:
    """``|Psi(x, t)|^2`` on ``x_grid``, normalized to unit ``t = 0`` norm on ``[0, b]``."""
    xs = np.asarray(x_grid, dtype=float)
    if xs.ndim != 1 or len(xs) == 0:
        raise DomainError("x_grid must be a non-empty 1-D array")
    G = gram_matrix(root, points)
    stamp = _norm(G, _phases(root, 0.0))
    psi = _phases(root, t) @ channel_functions(root, xs)
    psi = psi * np.exp(-1j * root.central_epsilon * t / root.config.hbar)
    values = np.abs(psi) ** 2 / stamp
    return DensityProfile(x_grid=xs, t=float(t), values=values, normalization_stamp=stamp)


def nondecay_probability(root: FloquetRoot, t_grid, samples: int = 128,
                         points: int = DEFAULT_POINTS) -> NondecayCurve:
    """Probability ``P(t)`` of finding the particle in ``[0, b]`` and its coarse-grained ``P_bar(t)``.

    ``P(t) = exp(2 Im(eps) t / hbar) h(t)`` and ``P_bar(t) = exp(2 Im(eps) t / hbar) <h>``,
    where ``<h>`` averages ``h`` over one drive period with ``samples`` points.
    """
    ts = np.asarray(t_grid, dtype=float)
    if ts.ndim != 1 or len(ts) == 0:
        raise DomainError("t_grid must be a non-empty 1-D array")
    if np.any(ts < 0) or np.any(np.diff(ts) < 0):
        raise DomainError("t_grid must be non-negative and sorted")
    G = gram_matrix(root, points)
    h = _h_values(root, G, ts)
    period = 2.0 * math.pi / root.omega
    h_mean = periodic_average(lambda s: _h_values(root, G, [s])[0], period, samples)
    im = root.epsilon.imag
    decay = np.exp(2.0 * im * ts / root.config.hbar)
    return NondecayCurve(t_grid=ts, p_values=decay * h, p_bar_values=decay * h_mean,
                         h_mean=h_mean, im_epsilon=im)
