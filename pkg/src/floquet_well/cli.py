"""
Command-line front end
======================

::

    floquet-well static
    floquet-well solve --set V1=3 --set omega=9.3 --ratio
    floquet-well trace --set V1=1.5 --set omega_min=8.25 --set omega_max=10.5 --out trace.csv
    floquet-well crossings --set v1_values=0.15,1.5 --set omega_min=8.25 --set omega_max=10.5
    floquet-well nondecay --config run.cfg --set guesses=3.41-0.02j --format json --out p.json

Parameters come from built-in defaults (the reference well), then an
optional ``--config`` file of ``key = value`` lines, then ``--set``
overrides, then the dedicated flags. Every output starts with a metadata
block of ``#: key = value`` lines holding the fully resolved parameters, so
an output file is itself a valid ``--config`` and re-running from it
reproduces the file byte for byte (JSON output puts the block in a
``.meta`` file next to the table).

Inputs and outputs are in atomic units. ``--ratio`` reports energies,
frequencies and drive amplitudes divided by ``V0``; times stay atomic.

Exit status: 0 success, 2 bad configuration or sweep, 3 solver failure,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .errors import ContinuationError, ConvergenceError, DomainError, FloquetWellError
from .floquet import Truncation, solve_floquet
from .model import WellConfig, enumerate_static_levels
from .numerics import BRANCH_CONVENTIONS
from .observables import density_profile, nondecay_probability
from .spectra import crossing_scan, trace_branch

logger = logging.getLogger(__name__)

COMMANDS = ("static", "solve", "trace", "crossings", "density", "nondecay")
EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4

WELL_KEYS = ("a", "b", "V0", "V0_prime", "V1", "omega", "mass", "hbar")
TRUNCATION_KEYS = ("N", "residual_tol", "max_iters", "branch")
COMMAND_KEYS = {
    "static": ("grid_points",),
    "solve": ("guesses",),
    "trace": ("omega_min", "omega_max", "omega_step", "offsets"),
    "crossings": ("v1_values", "omega_min", "omega_max", "omega_step"),
    "density": ("guesses", "times", "x_max", "x_points"),
    "nondecay": ("guesses", "t_max", "t_points"),
}

DEFAULTS = {
    "a": 1.0, "b": 2.0, "V0": 15.0, "V0_prime": 7.5, "V1": 0.0, "omega": 0.0,
    "mass": 1.0, "hbar": 1.0,
    "residual_tol": 1e-10, "max_iters": 100, "branch": "outgoing",
    "grid_points": 400, "offsets": (0,), "times": (0.0,), "x_points": 201,
    "t_max": 20.0, "t_points": 201,
    "format": "csv", "ratio": False,
}


class ConfigError(DomainError):
    """A configuration line, key or value is invalid."""


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------

def _parse_bool(text):
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_list(kind):
    def parse(text):
        items = [s.strip() for s in text.split(",") if s.strip()]
        if not items:
            raise ValueError("empty list")
        return tuple(kind(s) for s in items)
    return parse


def _parse_complex(text):
    return complex(text.strip().replace(" ", ""))


_PARSERS = {
    **{k: float for k in WELL_KEYS},
    "N": int, "residual_tol": float, "max_iters": int, "branch": str,
    "grid_points": int, "guesses": _parse_list(_parse_complex),
    "omega_min": float, "omega_max": float, "omega_step": float,
    "offsets": _parse_list(int), "v1_values": _parse_list(float),
    "times": _parse_list(float), "x_max": float, "x_points": int,
    "t_max": float, "t_points": int,
    "command": str, "format": str, "ratio": _parse_bool,
}


def _format_number(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (complex, np.complexfloating)):
        z = complex(value)
        return f"{z.real:.17g}{z.imag:+.17g}j"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _format_value(value) -> str:
    if isinstance(value, tuple):
        return ",".join(_format_number(v) for v in value)
    return _format_number(value)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

def parse_assignment(text: str, where: str = "") -> tuple[str, object]:
    """Parse one ``key = value`` assignment into a typed pair."""
    if "=" not in text:
        raise ConfigError(f"{where}expected 'key = value', got {text.strip()!r}")
    key, _, raw = text.partition("=")
    key, raw = key.strip(), raw.strip()
    if key not in _PARSERS:
        raise ConfigError(f"{where}unknown key {key!r}")
    try:
        return key, _PARSERS[key](raw)
    except ValueError as exc:
        raise ConfigError(f"{where}bad value for {key!r}: {exc}") from None


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse a flat configuration.

    Plain files hold ``key = value`` lines with ``#`` comments. A file whose
    first non-blank line starts with ``#:`` is an emitted table; only its
    ``#:`` metadata lines are read.
    """
    lines = text.splitlines()
    first = next((ln for ln in lines if ln.strip()), "")
    header_mode = first.lstrip().startswith("#:")
    values = {}
    for number, line in enumerate(lines, start=1):
        stripped = line.strip()
        if header_mode:
            if not stripped.startswith("#:"):
                continue
            stripped = stripped[2:].strip()
        elif not stripped or stripped.startswith("#"):
            continue
        key, value = parse_assignment(stripped, f"{source}:{number}: ")
        values[key] = value
    return values


def resolve(values: dict) -> dict:
    """Fill defaults, validate, and return the complete parameter set."""
    params = dict(DEFAULTS)
    params.update(values)
    command = params.get("command")
    if command not in COMMANDS:
        raise ConfigError(f"command must be one of {', '.join(COMMANDS)}, got {command!r}")
    if params["format"] not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {params['format']!r}")
    if params["branch"] not in BRANCH_CONVENTIONS:
        raise ConfigError(f"branch must be one of {', '.join(BRANCH_CONVENTIONS)}")

    if command in ("trace", "crossings"):
        for key in ("omega_min", "omega_max"):
            if key not in params:
                raise ConfigError(f"{command} needs {key}")
        if not params["omega_max"] > params["omega_min"] > 0:
            raise ConfigError(
                f"invalid sweep: need 0 < omega_min < omega_max, got "
                f"[{params['omega_min']}, {params['omega_max']}]")
        params.setdefault("omega_step", 0.005 * params["V0"] / params["hbar"])
        if not params["omega_step"] > 0:
            raise ConfigError("invalid sweep: omega_step must be positive")
        # The drive frequency is swept; the well is built at the lower end.
        params["omega"] = params["omega_min"]
    if command == "crossings":
        if "v1_values" not in params:
            raise ConfigError("crossings needs v1_values")
        params["v1_values"] = tuple(sorted(params["v1_values"]))
        params["V1"] = max(params["v1_values"])
    if command == "density":
        params.setdefault("x_max", params["b"])
        if params["x_max"] < params["b"] or params["x_points"] < 2:
            raise ConfigError("density needs x_max >= b and x_points >= 2")
    if command == "nondecay" and (params["t_max"] <= 0 or params["t_points"] < 2):
        raise ConfigError("nondecay needs t_max > 0 and t_points >= 2")

    well = WellConfig(**{k: params[k] for k in WELL_KEYS})
    if "N" not in params:
        params["N"] = Truncation.for_config(well).N
    Truncation(N=params["N"], residual_tol=params["residual_tol"],
               max_iters=params["max_iters"], branch=params["branch"])
    return params


def metadata_keys(params: dict) -> list[str]:
    """Keys written to an output's metadata block, in a fixed order."""
    keys = ["command", *WELL_KEYS, *TRUNCATION_KEYS]
    keys += [k for k in COMMAND_KEYS[params["command"]] if k in params]
    return keys + ["format", "ratio"]


def metadata_lines(params: dict) -> list[str]:
    return [f"#: {k} = {_format_value(params[k])}" for k in metadata_keys(params)]


def _well(params: dict, **changes) -> WellConfig:
    values = {k: params[k] for k in WELL_KEYS}
    values.update(changes)
    return WellConfig(**values)


def _truncation(params: dict) -> Truncation:
    return Truncation(N=params["N"], residual_tol=params["residual_tol"],
                      max_iters=params["max_iters"], branch=params["branch"])


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------

def _flatten(row: dict) -> dict:
    out = {}
    for key, value in row.items():
        if isinstance(value, (complex, np.complexfloating)):
            out[f"re_{key}"] = float(value.real)
            out[f"im_{key}"] = float(value.imag)
        else:
            out[key] = value
    return out


def _csv_cell(value) -> str:
    if value is None:
        return ""
    return _format_number(value)


def _json_value(value):
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    return value


def render_table(rows, fmt: str, columns=None, meta_lines=()) -> str:
    """Render records as CSV (with metadata comment lines) or as a JSON array."""
    flat = [_flatten(r) for r in rows]
    if flat:
        cols = list(flat[0])
        if any(list(r) != cols for r in flat):
            raise DomainError("rows must all have the same fields")
    else:
        cols = list(columns or [])
    if fmt == "csv":
        buf = io.StringIO()
        for line in meta_lines:
            buf.write(line + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for r in flat:
            writer.writerow([_csv_cell(r[c]) for c in cols])
        return buf.getvalue()
    if fmt == "json":
        records = [{c: _json_value(r[c]) for c in cols} for r in flat]
        return json.dumps(records, indent=1, allow_nan=False) + "\n"
    raise DomainError(f"unknown format {fmt!r}")


def _atomic_write(path: Path, text: str) -> None:
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_table(rows, fmt: str, path, columns=None, meta_lines=()) -> None:
    """Write records to ``path`` atomically (``None`` or ``"-"`` means stdout).

    For JSON the metadata lines go to ``<path>.meta``.
    """
    text = render_table(rows, fmt, columns, meta_lines if fmt == "csv" else ())
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    path = Path(path)
    _atomic_write(path, text)
    if fmt == "json" and meta_lines:
        _atomic_write(path.with_name(path.name + ".meta"), "".join(l + "\n" for l in meta_lines))


def read_table(path) -> list[dict]:
    """Read an emitted CSV or JSON table back into records of floats and strings."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if text.lstrip().startswith("["):
        return json.loads(text)
    body = [ln for ln in text.splitlines() if not ln.startswith("#:")]
    reader = csv.DictReader(io.StringIO("\n".join(body) + "\n"))
    records = []
    for row in reader:
        rec = {}
        for key, cell in row.items():
            try:
                rec[key] = float(cell)
            except ValueError:
                rec[key] = cell
        records.append(rec)
    return records


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _static_levels(params):
    return enumerate_static_levels(_well(params, V1=0.0, omega=0.0), params["grid_points"])


def _roots(params):
    cfg = _well(params)
    if not cfg.omega > 0:
        raise ConfigError(f"{params['command']} needs omega > 0")
    guesses = params.get("guesses")
    if guesses is None:
        guesses = tuple(lv.energy for lv in _static_levels(params))
        params["guesses"] = guesses
    trunc = _truncation(params)
    return [(g, solve_floquet(cfg, trunc, g)) for g in guesses]


def cmd_static(params, scale):
    levels = _static_levels(params)
    rows = [{"index": i, "kind": lv.kind, "energy": lv.energy / scale} for i, lv in enumerate(levels)]
    return rows, ["index", "kind", "re_energy", "im_energy"]


def cmd_solve(params, scale):
    rows = [{"index": i, "guess": complex(g) / scale, "epsilon": r.epsilon / scale,
             "residual": r.residual}
            for i, (g, r) in enumerate(_roots(params))]
    return rows, ["index", "re_guess", "im_guess", "re_epsilon", "im_epsilon", "residual"]


def cmd_trace(params, scale):
    cfg = _well(params)
    trunc = _truncation(params)
    rows = []
    for i, level in enumerate(_static_levels(params)):
        seed = solve_floquet(cfg, trunc, level.energy)
        branch = trace_branch(cfg, trunc, seed, (params["omega_min"], params["omega_max"]),
                              params["omega_step"], parent=f"E{i}")
        if branch.terminated_at is not None:
            logger.warning("branch E%d stopped at omega=%.6g: %s", i, branch.terminated_at,
                           branch.termination_reason)
        for n in params["offsets"]:
            for s in branch.shifted(n).samples:
                rows.append({"parent": f"E{i}", "offset": int(n), "omega": s.omega / scale,
                             "epsilon": s.epsilon / scale, "status": s.status})
    return rows, ["parent", "offset", "omega", "re_epsilon", "im_epsilon", "status"]


def cmd_crossings(params, scale):
    cfg = _well(params)
    entries = crossing_scan(cfg, _truncation(params), params["v1_values"],
                            (params["omega_min"], params["omega_max"]),
                            initial_step=params["omega_step"])
    rows = []
    for e in entries:
        ev = e.event
        rows.append({
            "v1": e.v1 / scale,
            "kind": ev.kind if ev else "unclassified",
            "omega_at": ev.omega_at / scale if ev else None,
            "min_gap": ev.min_gap / scale if ev else None,
            "exchanged_imaginary": ev.exchanged_imaginary if ev else None,
            "branch_a": ev.branches[0] if ev else None,
            "branch_b": ev.branches[1] if ev else None,
            "error": e.error,
        })
    return rows, ["v1", "kind", "omega_at", "min_gap", "exchanged_imaginary",
                  "branch_a", "branch_b", "error"]


def cmd_density(params, scale):
    xs = np.linspace(0.0, params["x_max"], params["x_points"])
    rows = []
    for i, (_, root) in enumerate(_roots(params)):
        for t in params["times"]:
            prof = density_profile(root, xs, t)
            rows += [{"root": i, "t": float(t), "x": float(x), "density": float(v)}
                     for x, v in zip(prof.x_grid, prof.values)]
    return rows, ["root", "t", "x", "density"]


def cmd_nondecay(params, scale):
    ts = np.linspace(0.0, params["t_max"], params["t_points"])
    roots = _roots(params)
    rows = []
    for i, (_, root) in enumerate(roots):
        curve = nondecay_probability(root, ts)
        h = curve.p_values * curve.h_mean / curve.p_bar_values
        for t, p, pb, hv in zip(ts, curve.p_values, curve.p_bar_values, h):
            row = {"t": float(t), "P": float(p), "P_bar": float(pb), "h": float(hv)}
            if len(roots) > 1:
                row = {"root": i, **row}
            rows.append(row)
    cols = ["t", "P", "P_bar", "h"]
    return rows, (["root"] + cols if len(roots) > 1 else cols)


_DISPATCH = {
    "static": cmd_static, "solve": cmd_solve, "trace": cmd_trace,
    "crossings": cmd_crossings, "density": cmd_density, "nondecay": cmd_nondecay,
}


def run(params: dict, out=None) -> None:
    """Execute a resolved parameter set and emit its table."""
    scale = params["V0"] if params["ratio"] else 1.0
    rows, columns = _DISPATCH[params["command"]](params, scale)
    emit_table(rows, params["format"], out, columns, metadata_lines(params))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="floquet-well",
        description="Floquet quasienergies of a square well with an oscillating barrier.")
    parser.add_argument("command", nargs="?", choices=COMMANDS,
                        help="what to compute (may also come from the config file)")
    parser.add_argument("--config", type=Path, help="flat 'key = value' file, or an emitted table")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override one parameter (repeatable)")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument("--sidebands", type=int, metavar="N", help="sidebands kept on each side")
    parser.add_argument("--ratio", action="store_true", default=None,
                        help="report energies and frequencies in units of V0")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")

    try:
        values = {}
        if args.config is not None:
            try:
                text = args.config.read_text(encoding="utf-8")
            except OSError as exc:
                print(f"error: cannot read config: {exc}", file=sys.stderr)
                return EXIT_IO
            values.update(parse_config_text(text, str(args.config)))
        for item in args.overrides:
            key, value = parse_assignment(item, "--set: ")
            values[key] = value
        if args.command is not None:
            values["command"] = args.command
        if args.format is not None:
            values["format"] = args.format
        if args.sidebands is not None:
            values["N"] = args.sidebands
        if args.ratio:
            values["ratio"] = True
        params = resolve(values)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        run(params, args.out)
    except ConvergenceError as exc:
        print(f"error: no convergence: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ContinuationError as exc:
        print(f"error: continuation failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FloquetWellError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
