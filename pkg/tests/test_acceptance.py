"""Acceptance criteria for the reference well (a=1, b=2, V0=15, V0'=7.5).

Test names carry the criterion number; the conftest summary prints one
PASS/FAIL line per criterion.
"""

import math

import numpy as np
import pytest

from floquet_well import (Truncation, matching_residuals, nondecay_probability, periodic_factor,
                          reference_well, solve_floquet, trace_branch)
from floquet_well.cli import main, read_table
from floquet_well.floquet import root_residual, subband_equations_residual, subband_solve
from floquet_well.numerics import bessel_jn, bessel_jn_table

V0 = 15.0


def report(number, ok, detail):
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, detail


def cli_table(tmp_path, name, *args):
    out = tmp_path / name
    status = main([*args, "--out", str(out)])
    assert status == 0, f"exit status {status}"
    return read_table(out)


def scan(tmp_path, name, v1_ratios, lo, hi):
    values = ",".join(repr(v * V0) for v in v1_ratios)
    return cli_table(tmp_path, name, "crossings", "--sidebands", "2", "--ratio",
                     "--set", f"v1_values={values}",
                     "--set", f"omega_min={lo * V0!r}", "--set", f"omega_max={hi * V0!r}")


def test_criterion_1_static_spectrum(tmp_path):
    rows = cli_table(tmp_path, "static.csv", "static", "--ratio")
    E = [complex(r["re_energy"], r["im_energy"]) for r in rows]
    ok = (len(E) == 2 and abs(E[0].real - 0.232123) < 1e-5 and abs(E[0].imag) < 1e-5
          and abs(E[1].real - 0.864945) < 1e-5 and abs(E[1].imag + 0.00255261) < 1e-5)
    report(1, ok, f"E/V0 = {E}")


def test_criterion_2_driven_roots(tmp_path):
    rows = cli_table(tmp_path, "solve.csv", "solve", "--ratio", "--sidebands", "2",
                     "--set", f"V1={0.2 * V0!r}", "--set", f"omega={0.62 * V0!r}")
    eps = sorted((complex(r["re_epsilon"], r["im_epsilon"]) for r in rows), key=lambda z: z.real)
    want = (0.227343 - 0.001456j, 0.251714 - 0.004995j)
    errors = [(abs(g.real - w.real), abs(g.imag - w.imag)) for g, w in zip(eps, want)]
    ok = len(eps) == 2 and all(max(e) < 1e-4 for e in errors)
    report(2, ok, f"eps/V0 = {eps}, component errors = {errors}")


def test_criterion_3_static_limits(static_levels):
    worst_weak = 0.0
    for level in static_levels:
        root = solve_floquet(reference_well(1e-8, 0.62), Truncation(N=2), level.energy)
        worst_weak = max(worst_weak, abs(root.central_epsilon - level.energy) / V0)
    worst_fast = 0.0
    for level in static_levels:
        root = solve_floquet(reference_well(0.2, 100.0), Truncation(N=2), level.energy)
        worst_fast = max(worst_fast, abs(root.central_epsilon - level.energy) / V0)
    report(3, worst_weak < 1e-7 and worst_fast < 1e-4,
           f"weak drive {worst_weak:.2e} V0, fast drive {worst_fast:.2e} V0")


@pytest.mark.slow
def test_criterion_4_avoided_crossing(tmp_path):
    rows = scan(tmp_path, "avoided.csv", (0.1, 0.2), 0.55, 0.70)
    ok = (len(rows) == 2
          and all(r["kind"] == "avoided" for r in rows)
          and all(r["exchanged_imaginary"] == "true" for r in rows)
          and all(abs(r["omega_at"] - 0.632822) <= 0.02 for r in rows)
          and rows[1]["min_gap"] > rows[0]["min_gap"])
    detail = [(r["v1"], r["kind"], r["omega_at"], r["min_gap"]) for r in rows]
    report(4, ok, f"(V1/V0, kind, omega/V0, gap/V0) = {detail}")


@pytest.mark.slow
def test_criterion_5_direct_crossing(tmp_path):
    rows = scan(tmp_path, "direct.csv", (0.1,), 0.28, 0.35)
    r = rows[0]
    ok = r["kind"] == "direct" and abs(r["omega_at"] - 0.316411) <= 0.02
    report(5, ok, f"kind={r['kind']}, omega/V0={r['omega_at']}")


@pytest.mark.slow
def test_criterion_6_threshold(tmp_path):
    ratios = (0.01, 0.02, 0.03, 0.05, 0.1)
    rows = scan(tmp_path, "threshold.csv", ratios, 0.55, 0.70)
    kinds = [r["kind"] for r in rows]
    ok = len(kinds) == len(ratios) and set(kinds) <= {"direct", "avoided"}
    bracket = None
    if ok:
        switches = [i for i in range(len(kinds) - 1) if kinds[i] != kinds[i + 1]]
        ok = (len(switches) == 1 and kinds[0] == "direct" and kinds[-1] == "avoided")
        if ok:
            i = switches[0]
            bracket = (ratios[i], ratios[i + 1])
            ok = bracket[0] >= 0.02 and bracket[1] <= 0.05
    report(6, ok, f"kinds={kinds}, bracket={bracket}")


@pytest.fixture(scope="module")
def driven_pair(static_levels):
    cfg = reference_well(0.2, 0.62)
    roots = [solve_floquet(cfg, Truncation(N=2), lv.energy) for lv in static_levels]
    return sorted(roots, key=lambda r: -r.epsilon.imag)  # more stable first


def test_criterion_7_observables(driven_pair):
    tau = np.linspace(0.0, 300.0, 301)
    curves = [nondecay_probability(r, tau / V0) for r in driven_pair]
    checks = {}
    checks["P(0)=1"] = all(c.p_values[0] == 1.0 for c in curves)
    checks["monotone"] = all(np.all(np.diff(c.p_bar_values) < 0) for c in curves)
    slopes = [np.polyfit(c.t_grid, np.log(c.p_bar_values), 1)[0] / (2 * r.epsilon.imag)
              for c, r in zip(curves, driven_pair)]
    checks["slope"] = all(abs(s - 1.0) < 1e-2 for s in slopes)
    rng = np.random.default_rng(0)
    period_err = 0.0
    for r in driven_pair:
        T = 2 * math.pi / r.omega
        for t in rng.uniform(0, 300 / V0, 10):
            period_err = max(period_err, abs(periodic_factor(r, t + T) - periodic_factor(r, t)))
    checks["periodic"] = period_err < 1e-8
    checks["ordering"] = bool(np.all(curves[1].p_bar_values[1:] < curves[0].p_bar_values[1:]))
    report(7, all(checks.values()), f"{checks}, slope ratios {slopes}, period error {period_err:.1e}")


def test_criterion_8_root_and_matching_residuals(driven_pair, static_levels):
    roots = list(driven_pair)
    roots += [solve_floquet(reference_well(0.1, 0.4), Truncation(N=2), lv.energy) for lv in static_levels]
    worst_root = max(root_residual(r) for r in roots)
    worst_match = max(matching_residuals(r).max() for r in roots)
    report(8, worst_root <= 1e-10 and worst_match <= 1e-8,
           f"root residual {worst_root:.1e}, matching {worst_match:.1e}")


def test_criterion_8_subband_back_substitution(driven_pair):
    worst = 0.0
    for r in driven_pair:
        sub = subband_solve(r.config, r.truncation, r.central_epsilon)
        for a0, b0 in ((1.0, 0.0), (0.0, 1.0)):
            worst = max(worst, subband_equations_residual(r.config, r.truncation, r.central_epsilon,
                                                          sub, a0, b0))
    report(8, worst <= 1e-10, f"subband residual {worst:.1e}")


def test_criterion_8_truncation_drift(driven_pair, static_levels):
    points = [(0.2, 0.62), (1e-8, 0.62), (0.2, 100.0)]
    worst = 0.0
    for v1, om in points:
        cfg = reference_well(v1, om)
        for lv in static_levels:
            r2 = solve_floquet(cfg, Truncation(N=2), lv.energy)
            r3 = solve_floquet(cfg, Truncation(N=3), r2.central_epsilon)
            worst = max(worst, abs(r3.epsilon - r2.epsilon) / V0)
    report(8, worst < 1e-4, f"N to N+1 drift {worst:.2e} V0")


def test_criterion_8_bessel_checks():
    worst = 0.0
    for x in (0.05, 0.3, 1.0, 3.9, 4.1, 10.0, 25.0):
        J = bessel_jn_table(20, x)
        for m in range(-19, 20):
            worst = max(worst, abs(J[m - 1 + 20] + J[m + 1 + 20] - 2 * m / x * J[m + 20]))
        for n in range(1, 20):
            worst = max(worst, abs(bessel_jn(-n, x) - (-1) ** n * bessel_jn(n, x)))
    report(8, worst < 1e-10, f"recurrence/symmetry error {worst:.1e}")


def test_criterion_8_step_refinement(static_levels):
    cfg = reference_well(0.1, 0.55)
    trunc = Truncation(N=2)
    seed = solve_floquet(cfg, trunc, static_levels[1].energy)
    window = (0.55 * V0, 0.60 * V0)
    coarse = trace_branch(cfg, trunc, seed, window, 0.075, sideband_offset=-1)
    fine = trace_branch(cfg, trunc, seed, window, 0.0375, sideband_offset=-1)
    worst = abs(coarse.epsilons[-1] - fine.epsilons[-1])
    for s in coarse.samples:
        guess = complex(np.interp(s.omega, fine.omegas, fine.epsilons.real),
                        np.interp(s.omega, fine.omegas, fine.epsilons.imag))
        again = solve_floquet(cfg.replace(omega=s.omega), trunc, guess + s.omega)
        worst = max(worst, abs(again.central_epsilon - s.omega - s.epsilon))
    report(8, worst < 1e-8, f"step refinement difference {worst:.1e}")


def test_criterion_8_cli_rerun_identical(tmp_path):
    args = ["nondecay", "--set", f"V1={0.2 * V0!r}", "--set", f"omega={0.62 * V0!r}",
            "--set", "t_points=51"]
    outputs = []
    for name in ("first.csv", "second.csv"):
        assert main([*args, "--out", str(tmp_path / name)]) == 0
        outputs.append((tmp_path / name).read_bytes())
    report(8, outputs[0] == outputs[1], f"{len(outputs[0])} bytes, identical={outputs[0] == outputs[1]}")
