"""
Square well with a rectangular barrier
======================================

Potential (hard wall at the origin)::

    V(x, t) = inf                      x < 0
              0                        0 <= x < a
              V0 + V1 cos(omega t)     a <= x <= b
              V0'                      x > b

This module holds the configuration, the channel momenta

    k_n  = sqrt(2m(eps + n hbar omega)) / hbar
    q_n  = sqrt(2m(V0 - eps - n hbar omega)) / hbar
    k'_n = sqrt(2m(eps + n hbar omega - V0')) / hbar

and the solver for the undriven (V1 = 0) well, whose bound states and
Gamow resonances anchor the driven spectra.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConvergenceError, DomainError
from .numerics import RootFindSettings, branch_sqrt, branch_sqrt_array, find_root

BOUND_IM_TOL = 1e-10


@dataclass(frozen=True)
class WellConfig:
    """Geometry, potential and units of the driven well (atomic units by default)."""

    a: float
    b: float
    V0: float
    V0_prime: float
    V1: float = 0.0
    omega: float = 0.0
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("a", "b", "V0", "V0_prime", "V1", "omega", "mass", "hbar"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise DomainError(f"{name} must be a finite real number, got {value!r}")
            object.__setattr__(self, name, float(value))
        if not 0.0 < self.a < self.b:
            raise DomainError(f"need 0 < a < b, got a={self.a}, b={self.b}")
        if not self.V0 > 0.0:
            raise DomainError(f"V0 must be positive, got {self.V0}")
        if not 0.0 <= self.V0_prime < self.V0:
            raise DomainError(f"need 0 <= V0_prime < V0, got V0_prime={self.V0_prime}")
        if not 0.0 <= self.V1 < self.V0 - self.V0_prime:
            raise DomainError(f"need 0 <= V1 < V0 - V0_prime, got V1={self.V1}")
        if self.omega < 0.0:
            raise DomainError(f"omega must be non-negative, got {self.omega}")
        if self.V1 > 0.0 and self.omega == 0.0:
            raise DomainError("a driven barrier (V1 > 0) needs omega > 0")
        if not (self.mass > 0.0 and self.hbar > 0.0):
            raise DomainError("mass and hbar must be positive")

    @property
    def alpha(self) -> float:
        """Drive strength V1 / (hbar omega); zero for an undriven barrier."""
        if self.V1 == 0.0:
            return 0.0
        return self.V1 / (self.hbar * self.omega)

    @property
    def photon(self) -> float:
        """Quantum of drive energy, hbar omega."""
        return self.hbar * self.omega

    def replace(self, **changes) -> "WellConfig":
        return replace(self, **changes)


def reference_well(V1_ratio: float = 0.0, omega_ratio: float = 0.0) -> WellConfig:
    """a=1, b=2, V0=15, V0'=V0/2 with V1 and omega given in units of V0."""
    V0 = 15.0
    return WellConfig(a=1.0, b=2.0, V0=V0, V0_prime=V0 / 2, V1=V1_ratio * V0, omega=omega_ratio * V0)


@dataclass(frozen=True)
class ChannelMomenta:
    k_n: complex
    q_n: complex
    k_prime_n: complex
    channel_index: int


@dataclass(frozen=True)
class StaticLevel:
    """Eigenvalue (bound) or Gamow resonance of the undriven well."""

    energy: complex
    kind: str  # "bound" or "resonance"

    @property
    def lifetime(self) -> float:
        """hbar / (2 |Im E|) in units with hbar = 1; infinite for bound states."""
        im = abs(self.energy.imag)
        return math.inf if im == 0.0 else 1.0 / (2.0 * im)


def _check_energy(epsilon) -> complex:
    eps = complex(epsilon)
    if not (math.isfinite(eps.real) and math.isfinite(eps.imag)):
        raise DomainError(f"non-finite energy {epsilon!r}")
    return eps


def channel_momenta(config: WellConfig, epsilon: complex, n: int,
                    branch: str = "outgoing") -> ChannelMomenta:
    """Momenta of sideband channel ``n`` at quasienergy ``epsilon``.

    ``k_n`` and ``q_n`` use the principal root; ``k'_n`` uses ``branch``
    (``outgoing`` by default, see :func:`~floquet_well.numerics.branch_sqrt`).
    """
    eps = _check_energy(epsilon)
    scale = 2.0 * config.mass / config.hbar**2
    e_n = eps + n * config.photon
    return ChannelMomenta(
        k_n=branch_sqrt(scale * e_n, "decay"),
        q_n=branch_sqrt(scale * (config.V0 - e_n), "decay"),
        k_prime_n=branch_sqrt(scale * (e_n - config.V0_prime), branch),
        channel_index=int(n),
    )


def momenta_arrays(config: WellConfig, epsilon: complex, channels: np.ndarray,
                   branch: str = "outgoing"):
    """Vectorized channel momenta ``(k, q, k')`` for an array of channel indices."""
    eps = _check_energy(epsilon)
    scale = 2.0 * config.mass / config.hbar**2
    e_n = eps + np.asarray(channels) * config.photon
    k = branch_sqrt_array(scale * e_n, "decay")
    q = branch_sqrt_array(scale * (config.V0 - e_n), "decay")
    kp = branch_sqrt_array(scale * (e_n - config.V0_prime), branch)
    return k, q, kp


def sin_over_k(k, a):
    """sin(k a) / k, finite at k = 0."""
    ka = np.asarray(k * a, dtype=complex)
    return a * np.sinc(ka / np.pi)


def static_residual(config: WellConfig, energy: complex, branch: str = "outgoing") -> complex:
    """Matching residual of the undriven well.

    ``(q/k) tan(k a) + 1 - (q + i k')/(q - i k') ((q/k) tan(k a) - 1) exp(-2 q (b - a))``
    evaluated at channel 0. Zero at bound states and resonances.
    """
    E = _check_energy(energy)
    if E == 0:
        raise DomainError("energy 0 is singular (k = 0)")
    if E == config.V0:
        raise DomainError("energy V0 is singular (q = 0)")
    m = channel_momenta(config, E, 0, branch)
    k, q, kp = m.k_n, m.q_n, m.k_prime_n
    cos_ka = cmath.cos(k * config.a)
    if cos_ka == 0:
        raise DomainError("tan(k a) pole in channel 0")
    t = q * complex(sin_over_k(k, config.a)) / cos_ka
    den = q - 1j * kp
    if den == 0:
        raise DomainError("vanishing Gamow denominator in channel 0")
    return t + 1.0 - (q + 1j * kp) / den * (t - 1.0) * cmath.exp(-2.0 * q * (config.b - config.a))


def _classify(config: WellConfig, energy: complex) -> str | None:
    if abs(energy.imag) <= BOUND_IM_TOL * max(1.0, config.V0) and energy.real < config.V0_prime:
        return "bound"
    if energy.imag < 0.0:
        return "resonance"
    return None


def solve_static(config: WellConfig, guess: complex,
                 settings: RootFindSettings | None = None) -> StaticLevel:
    """Polish a static level from ``guess``.

    Raises
    ------
    ConvergenceError
        If the iteration fails or lands on an unphysical root (Im E > 0).
    """
    settings = settings or RootFindSettings()
    g = complex(guess)
    if not 0.0 < g.real < config.V0:
        raise DomainError(f"guess real part must lie in (0, V0), got {g!r}")
    root = find_root(lambda e: static_residual(config, e), g, settings)
    if abs(root.imag) <= BOUND_IM_TOL * max(1.0, config.V0):
        root = complex(root.real, 0.0)
    kind = _classify(config, root)
    if kind is None:
        raise ConvergenceError("converged to an unphysical root", root, abs(static_residual(config, root)))
    return StaticLevel(energy=root, kind=kind)


def enumerate_static_levels(config: WellConfig, grid_points: int = 400,
                            settings: RootFindSettings | None = None) -> list[StaticLevel]:
    """All bound states and resonances found from a scan of (0, V0).

    Below V0' the residual is real on the real axis and bound states show
    up as sign changes; above V0' resonances show up as local minima of
    ``|residual|`` and are polished from just below the real axis.
    """
    if grid_points < 16:
        raise DomainError("grid_points must be at least 16")
    settings = settings or RootFindSettings()
    V0 = config.V0
    energies = np.linspace(0.0, V0, grid_points + 2)[1:-1]
    values = []
    for E in energies:
        try:
            values.append(static_residual(config, E))
        except DomainError:
            values.append(complex(math.nan, math.nan))
    values = np.array(values)
    mags = np.abs(values)

    seeds: list[complex] = []
    for i in range(len(energies) - 1):
        E1, E2 = energies[i], energies[i + 1]
        r1, r2 = values[i], values[i + 1]
        if E2 <= config.V0_prime and np.isfinite(r1) and np.isfinite(r2) and r1.real * r2.real < 0:
            seeds.append(E1 - r1.real * (E2 - E1) / (r2.real - r1.real))
    offset = 1e-3 * V0
    for i in range(1, len(energies) - 1):
        if not (mags[i] <= mags[i - 1] and mags[i] <= mags[i + 1]):
            continue
        E = energies[i]
        seeds.append(complex(E, -offset) if E > config.V0_prime else complex(E, 0.0))

    levels: list[StaticLevel] = []
    for seed in seeds:
        try:
            level = solve_static(config, seed, settings)
        except (ConvergenceError, DomainError):
            continue
        if not 0.0 < level.energy.real < V0:
            continue
        if any(abs(level.energy - other.energy) <= 1e-8 * max(1.0, V0) for other in levels):
            continue
        levels.append(level)
    levels.sort(key=lambda lv: lv.energy.real)
    return levels
