"""
Quasienergy branches and level crossings
========================================

Branches are followed in the drive frequency by predictor-corrector
continuation. Each sample is solved in the first Floquet zone, but the
branch stores the *continuous* value ``eps(omega)``, i.e. the zone-reduced
root shifted by whichever multiple of ``hbar omega`` keeps the curve
continuous. A branch seeded at static level ``E`` with sideband offset
``n`` therefore reads ``eps ~ E + n hbar omega`` in the undriven limit.

Two branches are compared on a common frequency grid. Real parts that
intersect while the imaginary parts keep their order make a direct
crossing; real parts that repel while the imaginary parts exchange make
an avoided crossing.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (ClassificationError, ContinuationError, ConvergenceError,
                     DomainError, FloquetWellError)
from .floquet import FloquetRoot, Truncation, reduce_to_first_zone, solve_floquet
from .model import StaticLevel, WellConfig, enumerate_static_levels

logger = logging.getLogger(__name__)

CONVERGED = "converged"
INTERPOLATED = "interpolated"


@dataclass(frozen=True)
class BranchSample:
    omega: float
    epsilon: complex
    status: str = CONVERGED
    root: FloquetRoot | None = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class Branch:
    """Ordered ``(omega, eps)`` samples of one quasienergy branch.

    ``epsilon`` values are continuous in ``omega``; use :meth:`zone_epsilons`
    for the first-zone representatives.
    """

    parent: str
    sideband_offset: int
    samples: tuple[BranchSample, ...]
    hbar: float = 1.0
    terminated_at: float | None = None
    termination_reason: str = ""

    @property
    def omegas(self) -> np.ndarray:
        return np.array([s.omega for s in self.samples])

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([s.epsilon for s in self.samples], dtype=complex)

    def zone_epsilons(self):
        """First-zone values and the zone index of every sample."""
        pairs = [reduce_to_first_zone(s.epsilon, s.omega, self.hbar) for s in self.samples]
        return np.array([p[0] for p in pairs], dtype=complex), np.array([p[1] for p in pairs])

    def shifted(self, offset: int) -> "Branch":
        """The same Floquet family relabelled as ``eps + (offset - sideband_offset) hbar omega``."""
        d = offset - self.sideband_offset
        samples = tuple(BranchSample(s.omega, s.epsilon + d * self.hbar * s.omega, s.status, s.root)
                        for s in self.samples)
        return Branch(self.parent, offset, samples, self.hbar, self.terminated_at, self.termination_reason)

    def max_jump_ratio(self) -> float:
        """Largest ``|d eps| / (hbar d omega)`` between consecutive samples."""
        if len(self.samples) < 2:
            return 0.0
        d_eps = np.abs(np.diff(self.epsilons))
        d_om = np.diff(self.omegas) * self.hbar
        return float(np.max(d_eps / d_om))


@dataclass(frozen=True)
class CrossingEvent:
    kind: str  # "direct" or "avoided"
    omega_at: float
    min_gap: float
    exchanged_imaginary: bool
    branches: tuple[str, str]


class ScanEntry(NamedTuple):
    v1: float
    event: CrossingEvent | None
    error: str | None = None


def _label(level: StaticLevel | None, index: int | None = None) -> str:
    if level is None:
        return "seed"
    tag = f"E{index}" if index is not None else "E"
    return f"{tag}={level.energy.real:.10g}{level.energy.imag:+.10g}j"


def trace_branch(config: WellConfig, trunc: Truncation, seed: FloquetRoot,
                 omega_range: tuple[float, float], initial_step: float,
                 parent: str = "seed", sideband_offset: int = 0) -> Branch:
    """Follow the branch through ``seed`` across ``omega_range``.

    ``seed`` must have been solved at one end of the range; its central band
    is kept for the whole branch, and the stored values are
    ``central_epsilon + sideband_offset * hbar * omega``. Each step
    extrapolates linearly from the last two samples, polishes with
    :func:`solve_floquet`, and rejects corrections larger than half a step
    in units of ``hbar``. Failed steps are halved down to
    ``initial_step / 64``, below which the branch terminates; four
    consecutive successes double the step again, up to ``initial_step``.

    The slope at the seed is unknown, so the first step is a probe of
    ``initial_step / 64`` predicted with the undriven slope
    ``sideband_offset`` and accepted within ``(N + 1/2) hbar`` per unit
    step, which bounds the slope of any state spread over ``N`` sidebands.

    Raises
    ------
    ContinuationError
        When not a single step beyond the seed succeeds.
    """
    lo, hi = float(min(omega_range)), float(max(omega_range))
    if not hi > lo:
        raise DomainError(f"empty omega range {omega_range!r}")
    if not initial_step > 0:
        raise DomainError("initial_step must be positive")
    tol = 1e-12 * max(1.0, abs(hi))
    if abs(seed.omega - lo) <= tol:
        start, end, direction = lo, hi, 1.0
    elif abs(seed.omega - hi) <= tol:
        start, end, direction = hi, lo, -1.0
    else:
        raise DomainError(f"seed omega {seed.omega} is not an endpoint of {omega_range!r}")

    hb = config.hbar
    n = int(sideband_offset)
    samples = [BranchSample(start, seed.central_epsilon + n * hb * start, CONVERGED, seed)]

    h = float(initial_step)
    min_step = initial_step / 64.0
    successes = 0
    terminated_at, reason = None, ""
    omega = start
    while direction * (end - omega) > tol:
        probe = len(samples) == 1
        om_new = omega + direction * (min_step if probe else h)
        if direction * (om_new - end) > -tol:
            om_new = end
        last = samples[-1]
        if probe:
            pred = last.epsilon + n * hb * (om_new - last.omega)
        else:
            prev = samples[-2]
            pred = last.epsilon + (last.epsilon - prev.epsilon) * (om_new - last.omega) / (last.omega - prev.omega)
        step = abs(om_new - omega)
        bound = (trunc.N + 0.5 if probe else 0.5) * hb * step
        accepted = None
        try:
            root = solve_floquet(config.replace(omega=om_new), trunc, pred - n * hb * om_new)
            eps_new = root.central_epsilon + n * hb * om_new
            if abs(eps_new - pred) <= bound:
                accepted = BranchSample(om_new, eps_new, CONVERGED, root)
        except FloquetWellError as exc:
            logger.debug("continuation step to omega=%g failed: %s", om_new, exc)
        if accepted is None:
            h *= 0.5
            successes = 0
            if probe or h < min_step:
                terminated_at = omega
                reason = f"no convergence beyond omega={omega:.12g}"
                logger.info("branch %s terminated: %s", parent, reason)
                break
            continue
        samples.append(accepted)
        omega = om_new
        successes += 1
        if successes >= 4:
            h = min(2.0 * h, initial_step)
            successes = 0

    if direction < 0:
        samples.reverse()
    branch = Branch(parent, n, tuple(samples), hb, terminated_at, reason)
    if len(samples) == 1:
        raise ContinuationError(f"branch {parent} failed at the first step", branch)
    return branch


def seed_branches(config: WellConfig, trunc: Truncation, levels: Sequence[StaticLevel],
                  omega_start: float, offsets: Sequence[int]) -> list[FloquetRoot]:
    """Floquet roots seeded at ``E + n hbar omega_start`` for every level and offset.

    Each seed is polished with its central band on the level itself, then
    reduced to the first zone. Non-convergent seeds are dropped, as are
    roots within 1e-8 of one already found (the offsets of one level all
    reduce to the same root).
    """
    cfg = config.replace(omega=omega_start)
    roots: list[FloquetRoot] = []
    for level in levels:
        for n in offsets:
            guess = level.energy + n * cfg.photon
            try:
                root = solve_floquet(cfg, trunc, guess, band_shift=-n)
            except FloquetWellError as exc:
                logger.info("seed %r failed: %s", guess, exc)
                continue
            if any(abs(root.epsilon - r.epsilon) <= 1e-8 for r in roots):
                continue
            roots.append(root)
    return roots


def _resample(branch: Branch, grid: np.ndarray) -> np.ndarray:
    om, eps = branch.omegas, branch.epsilons
    return np.interp(grid, om, eps.real) + 1j * np.interp(grid, om, eps.imag)


def _sign_change(values: np.ndarray) -> int | None:
    """Index i of the first interval [i, i+1] over which ``values`` changes sign."""
    for i in range(len(values) - 1):
        if values[i] == 0.0 or values[i] * values[i + 1] < 0.0:
            return i
    return None


def classify_crossing(branchA: Branch, branchB: Branch, omega_window: tuple[float, float],
                      gap_threshold: float | None = None) -> CrossingEvent:
    """Classify the encounter of two branches inside ``omega_window``.

    ``gap(omega) = Re eps_A - Re eps_B`` (modulo ``hbar omega``) on a common
    grid. A sign change makes a direct crossing; a positive interior
    minimum of ``|gap|`` below ``gap_threshold`` (default ``0.05 hbar
    omega``) together with a sign change of ``Im eps_A - Im eps_B`` makes
    an avoided one.

    Raises
    ------
    ClassificationError
        If the window is not covered, the branches coincide, or neither
        pattern is present.
    """
    lo, hi = float(min(omega_window)), float(max(omega_window))
    hb = branchA.hbar
    grids = []
    for br in (branchA, branchB):
        om = br.omegas
        if len(om) == 0 or om[0] > lo + 1e-12 * max(1.0, hi) or om[-1] < hi - 1e-12 * max(1.0, hi):
            raise ClassificationError(f"branch {br.parent} does not cover the window [{lo}, {hi}]")
        inside = om[(om >= lo) & (om <= hi)]
        if len(inside) < 8:
            raise ClassificationError(f"branch {br.parent} has fewer than 8 samples in the window")
        grids.append(inside)
    grid = np.unique(np.concatenate(grids))
    eA, eB = _resample(branchA, grid), _resample(branchB, grid)
    raw = (eA - eB).real
    shift = round(float(np.median(raw / (hb * grid))))
    gap = raw - shift * hb * grid
    dim = (eA - eB).imag
    if np.max(np.abs(gap)) == 0.0 and np.max(np.abs(dim)) == 0.0:
        raise ClassificationError("the two branches coincide")

    names = (branchA.parent, branchB.parent)
    threshold = gap_threshold if gap_threshold is not None else 0.05 * hb * 0.5 * (lo + hi)
    i_re = _sign_change(gap)
    i_im = _sign_change(dim)
    if i_re is not None and i_im is None:
        g1, g2 = gap[i_re], gap[i_re + 1]
        w = 0.0 if g1 == g2 else g1 / (g1 - g2)
        omega_at = grid[i_re] + w * (grid[i_re + 1] - grid[i_re])
        return CrossingEvent("direct", float(omega_at), 0.0, False, names)
    if i_re is None and i_im is not None:
        mags = np.abs(gap)
        j = int(np.argmin(mags))
        if 0 < j < len(grid) - 1:
            # Parabola through the three samples around the minimum.
            x = grid[j - 1:j + 2]
            c = np.polyfit(x - x[1], mags[j - 1:j + 2], 2)
            omega_at, min_gap = grid[j], mags[j]
            if c[0] > 0:
                xv = -c[1] / (2 * c[0])
                if abs(xv) <= max(x[2] - x[1], x[1] - x[0]):
                    omega_at, min_gap = x[1] + xv, min(mags[j], np.polyval(c, xv))
            if 0.0 < min_gap < threshold:
                return CrossingEvent("avoided", float(omega_at), float(min_gap), True, names)
    raise ClassificationError(
        f"cannot classify: real-gap sign change={i_re is not None}, "
        f"imaginary exchange={i_im is not None}, min |gap|={np.min(np.abs(gap)):.3e}")


def _trace_pair(config: WellConfig, trunc: Truncation, levels: Sequence[StaticLevel],
                window: tuple[float, float], step: float) -> list[Branch]:
    lo, hi = window
    first, second = levels[0], levels[1]
    n_second = round((first.energy - second.energy).real / (config.hbar * 0.5 * (lo + hi)))
    cfg = config.replace(omega=lo)
    out = []
    for idx, (level, n) in enumerate(((first, 0), (second, n_second))):
        seed = solve_floquet(cfg, trunc, level.energy)
        out.append(trace_branch(config, trunc, seed, (lo, hi), step,
                                parent=_label(level, idx), sideband_offset=n))
    return out


def crossing_scan(config: WellConfig, trunc: Truncation, v1_values: Sequence[float],
                  omega_window: tuple[float, float], levels: Sequence[StaticLevel] | None = None,
                  initial_step: float | None = None, gap_threshold: float | None = None,
                  refinements: int = 3) -> list[ScanEntry]:
    """Classify the crossing of two levels' branches for each drive amplitude.

    ``levels`` defaults to the two lowest static levels of ``config``. The
    second level is paired through the sideband ``n`` that brings it
    closest to the first at the window centre. Unclassifiable windows are
    retried with halved steps and a narrowed window up to ``refinements``
    times; remaining failures are recorded in the entry, and the scan goes on.
    """
    lo, hi = float(min(omega_window)), float(max(omega_window))
    if not hi > lo:
        raise DomainError(f"empty omega window {omega_window!r}")
    if levels is None:
        levels = enumerate_static_levels(config.replace(V1=0.0))
    if len(levels) < 2:
        raise DomainError("need two static levels to look for a crossing")
    step0 = initial_step if initial_step is not None else 0.005 * config.V0 / config.hbar
    entries = []
    for v1 in sorted(float(v) for v in v1_values):
        cfg = config.replace(V1=v1, omega=lo)
        event, error = None, None
        step, window = step0, (lo, hi)
        for attempt in range(refinements + 1):
            try:
                brA, brB = _trace_pair(cfg, trunc, levels, (lo, hi), step)
                event = classify_crossing(brA, brB, window, gap_threshold)
                break
            except FloquetWellError as exc:
                error = f"{type(exc).__name__}: {exc}"
                logger.info("V1=%g attempt %d: %s", v1, attempt, error)
                step *= 0.5
                width = (window[1] - window[0]) * 0.5
                centre = 0.5 * (window[0] + window[1])
                window = (max(lo, centre - width / 2), min(hi, centre + width / 2))
        entries.append(ScanEntry(v1, event, None if event is not None else error))
    return entries
