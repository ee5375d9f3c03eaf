"""
Numerical kernels
=================

Self-contained building blocks used by the solvers:

- Bessel functions of the first kind and integer order (ascending series,
  backward recurrence for large arguments);
- square roots with a fixed branch choice for channel momenta;
- a dense complex linear solve with a conditioning guard;
- a damped complex Newton iteration with a Muller fallback;
- a one-period average of a periodic function.

All functions are pure.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConditioningError, ConvergenceError, DomainError, FloquetWellError

logger = logging.getLogger(__name__)

MAX_BESSEL_ORDER = 64
_SERIES_LIMIT = 4.0

BRANCH_CONVENTIONS = ("decay", "outgoing", "principal")


# ---------------------------------------------------------------------------
# Bessel functions
# ---------------------------------------------------------------------------

def _bessel_series(n: int, x: float) -> float:
    # sum_k (-1)^k (x/2)^(2k+n) / (k! (k+n)!)
    half = 0.5 * x
    term = 1.0
    for j in range(1, n + 1):
        term *= half / j
    if term == 0.0:
        return 0.0
    total = term
    h2 = half * half
    k = 0
    while True:
        k += 1
        term *= -h2 / (k * (k + n))
        total += term
        if abs(term) <= 1e-17 * abs(total) and k > half:
            return total


def _bessel_miller(max_order: int, x: float) -> np.ndarray:
    """J_0..J_max_order(x) by normalized backward recurrence."""
    top = max(max_order, int(x))
    start = top + 20 + int(math.sqrt(40.0 * (top + 1)))
    start += start % 2
    values = np.zeros(max_order + 1)
    j_next, j_cur = 0.0, 1e-300
    norm = 0.0
    for k in range(start, 0, -1):
        j_prev = (2.0 * k / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        # j_cur now holds the unnormalized J_{k-1}
        if abs(j_cur) > 1e250:
            j_cur *= 1e-250
            j_next *= 1e-250
            values *= 1e-250
            norm *= 1e-250
        if k - 1 <= max_order:
            values[k - 1] = j_cur
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j_cur
    norm += j_cur
    return values / norm


def _check_argument(x: float) -> float:
    x = float(x)
    if not math.isfinite(x) or x < 0.0:
        raise DomainError(f"Bessel argument must be finite and non-negative, got {x!r}")
    return x


def bessel_jn(order: int, argument: float) -> float:
    """Bessel function of the first kind J_order(argument).

    Parameters
    ----------
    order : int
        Integer order, ``|order| <= 64``. Negative orders use
        ``J_{-n} = (-1)^n J_n``.
    argument : float
        Non-negative real argument.
    """
    x = _check_argument(argument)
    n = abs(int(order))
    if n > MAX_BESSEL_ORDER:
        raise DomainError(f"|order| must not exceed {MAX_BESSEL_ORDER}, got {order}")
    sign = -1.0 if (order < 0 and n % 2) else 1.0
    if x == 0.0:
        return 1.0 if n == 0 else 0.0
    if x < _SERIES_LIMIT:
        return sign * _bessel_series(n, x)
    return sign * float(_bessel_miller(n, x)[n])


def bessel_jn_table(max_order: int, argument: float) -> np.ndarray:
    """Array ``J[m + max_order] = J_m(argument)`` for ``m = -max_order..max_order``."""
    x = _check_argument(argument)
    if max_order < 0 or max_order > MAX_BESSEL_ORDER:
        raise DomainError(f"max_order must lie in [0, {MAX_BESSEL_ORDER}], got {max_order}")
    if x == 0.0:
        pos = np.zeros(max_order + 1)
        pos[0] = 1.0
    elif x < _SERIES_LIMIT:
        pos = np.array([_bessel_series(n, x) for n in range(max_order + 1)])
    else:
        pos = _bessel_miller(max_order, x)
    neg = pos[:0:-1] * np.where(np.arange(max_order, 0, -1) % 2, -1.0, 1.0)
    return np.concatenate([neg, pos])


# ---------------------------------------------------------------------------
# Branch-managed square roots
# ---------------------------------------------------------------------------

def branch_sqrt(z: complex, convention: str = "decay") -> complex:
    """Square root of ``z`` on a fixed branch.

    ``decay`` and ``principal`` return the principal root (``Re w >= 0``,
    ``Im w >= 0`` when ``Re w == 0``). ``outgoing`` is the Gamow branch for
    wavenumbers: ``Re w >= 0`` for open channels (``Re z >= 0``), so that
    ``exp(i w x)`` travels outward, and ``Im w >= 0`` for closed channels
    (``Re z < 0``), so that ``exp(i w x)`` decays. Its cut lies on the
    negative imaginary axis, which keeps closed channels continuous across
    the real energy axis.
    """
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"non-finite argument {z!r}")
    if convention not in BRANCH_CONVENTIONS:
        raise ValueError(f"unknown branch convention {convention!r}")
    w = cmath.sqrt(z)
    if w.real == 0.0 and w.imag < 0.0:
        w = -w
    if convention == "outgoing" and z.real < 0.0 and w.imag < 0.0:
        w = -w
    return w


def branch_sqrt_array(z: np.ndarray, convention: str = "decay") -> np.ndarray:
    """Vectorized :func:`branch_sqrt`."""
    z = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(z)):
        raise DomainError("non-finite argument in branch_sqrt_array")
    if convention not in BRANCH_CONVENTIONS:
        raise ValueError(f"unknown branch convention {convention!r}")
    w = np.sqrt(z)
    flip = (w.real == 0.0) & (w.imag < 0.0)
    if convention == "outgoing":
        flip |= (z.real < 0.0) & (w.imag < 0.0)
    return np.where(flip, -w, w)


# ---------------------------------------------------------------------------
# Linear algebra
# ---------------------------------------------------------------------------

def solve_linear(matrix, rhs, max_condition: float = 1e14, return_condition: bool = False):
    """Solve ``matrix @ x = rhs`` for a dense complex system.

    ``rhs`` may be a vector or a matrix of right-hand sides. With
    ``return_condition`` the 1-norm condition estimate is returned as well,
    as ``(x, cond)``. Raises
    :class:`ConditioningError` when the 1-norm condition estimate exceeds
    ``max_condition`` or the back-substitution residual is too large.
    """
    A = np.asarray(matrix, dtype=complex)
    b = np.asarray(rhs, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError(f"matrix must be square, got shape {A.shape}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise DomainError("non-finite entries in linear system")
    try:
        x = np.linalg.solve(A, b)
        cond = float(abs(np.linalg.cond(A, 1)))
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(f"singular matrix: {exc}") from exc
    if not math.isfinite(cond) or cond > max_condition:
        raise ConditioningError("linear system too ill-conditioned", cond)
    resid = np.linalg.norm(A @ x - b)
    bound = 1e-10 * (np.linalg.norm(A) * np.linalg.norm(x) + np.linalg.norm(b))
    if resid > bound:
        raise ConditioningError(f"back-substitution residual {resid:.3e} exceeds {bound:.3e}", cond)
    return (x, cond) if return_condition else x


# ---------------------------------------------------------------------------
# Complex root finding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RootFindSettings:
    """Stopping rules for :func:`find_root`.

    ``step_tol`` is relative to ``max(1, |z|)``.
    """

    residual_tol: float = 1e-10
    step_tol: float = 1e-12
    max_iters: int = 100
    finite_diff_scale: float = 1e-7

    def __post_init__(self):
        if not self.residual_tol > 0 or not self.step_tol > 0:
            raise DomainError("residual_tol and step_tol must be positive")
        if self.max_iters < 1:
            raise DomainError("max_iters must be at least 1")
        if not self.finite_diff_scale > 0:
            raise DomainError("finite_diff_scale must be positive")


def _finite(z: complex) -> bool:
    return math.isfinite(z.real) and math.isfinite(z.imag)


def _muller_step(z0, z1, z2, f0, f1, f2):
    h1, h2 = z1 - z0, z2 - z1
    if h1 == 0 or h2 == 0 or h1 + h2 == 0:
        return None
    d1, d2 = (f1 - f0) / h1, (f2 - f1) / h2
    a = (d2 - d1) / (h2 + h1)
    b = a * h2 + d2
    disc = cmath.sqrt(b * b - 4.0 * f2 * a)
    den = b + disc if abs(b + disc) >= abs(b - disc) else b - disc
    if den == 0:
        return None
    return z2 - 2.0 * f2 / den


def find_root(f: Callable[[complex], complex], guess: complex,
              settings: RootFindSettings | None = None) -> complex:
    """Find a zero of a complex residual near ``guess``.

    Damped Newton iteration with a central finite-difference derivative
    taken along the real direction. Evaluations that raise a package error
    (poles, singular momenta, singular systems) count as rejected trial
    points. When damping fails to reduce ``|f|`` a Muller step through the
    last three iterates is tried instead.

    Raises
    ------
    ConvergenceError
        If ``max_iters`` is exhausted; carries the best iterate.
    """
    s = settings or RootFindSettings()

    def evaluate(z):
        try:
            v = complex(f(z))
        except (FloquetWellError, ArithmeticError):
            return None
        return v if _finite(v) else None

    z = complex(guess)
    fz = evaluate(z)
    if fz is None:
        # Nudge off a singular starting point.
        z = z + s.finite_diff_scale * max(1.0, abs(z)) * 10
        fz = evaluate(z)
        if fz is None:
            raise ConvergenceError("residual undefined at the initial guess", complex(guess), math.inf)
    best_z, best_r = z, abs(fz)
    history = [(z, fz)]
    if fz == 0:
        return z

    for _ in range(s.max_iters):
        h = s.finite_diff_scale * max(1.0, abs(z))
        fp, fm = evaluate(z + h), evaluate(z - h)
        if fp is not None and fm is not None:
            deriv = (fp - fm) / (2.0 * h)
        elif fp is not None:
            deriv = (fp - fz) / h
        elif fm is not None:
            deriv = (fz - fm) / h
        else:
            deriv = 0.0

        z_new = f_new = None
        if deriv != 0 and _finite(deriv):
            step = -fz / deriv
            lam = 1.0
            for _ in range(12):
                trial = z + lam * step
                f_trial = evaluate(trial)
                if f_trial is not None and abs(f_trial) < abs(fz):
                    z_new, f_new = trial, f_trial
                    break
                lam *= 0.5
        if z_new is None and len(history) >= 3:
            (z0, f0), (z1, f1), (z2, f2) = history[-3:]
            trial = _muller_step(z0, z1, z2, f0, f1, f2)
            if trial is not None and _finite(trial):
                f_trial = evaluate(trial)
                if f_trial is not None and abs(f_trial) < abs(fz):
                    z_new, f_new = trial, f_trial
        if z_new is None:
            if abs(fz) <= s.residual_tol:
                # No trial point lowers |f| any further: the residual floor.
                return z
            break

        taken = abs(z_new - z)
        z, fz = z_new, f_new
        history.append((z, fz))
        if abs(fz) < best_r:
            best_z, best_r = z, abs(fz)
        if abs(fz) <= s.residual_tol and (fz == 0 or taken <= s.step_tol * max(1.0, abs(z))):
            return z

    raise ConvergenceError("root finder did not converge", best_z, best_r)


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

def periodic_average(g: Callable[[float], float], period: float, samples: int = 128) -> float:
    """Average of a periodic function over one period.

    Composite trapezoid rule on ``samples`` equally spaced points, which for
    a periodic integrand is spectrally accurate.
    """
    if not period > 0:
        raise DomainError(f"period must be positive, got {period!r}")
    if samples < 16:
        raise DomainError(f"need at least 16 samples, got {samples}")
    values = np.array([g(period * k / samples) for k in range(samples)], dtype=float)
    if not np.all(np.isfinite(values)):
        raise DomainError("non-finite sample in periodic_average")
    return float(values.mean())
