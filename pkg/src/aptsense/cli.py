"""Command-line entry point.

Every subcommand writes one table, as CSV (header row, floats in ``%.16e``)
or as a JSON object with ``params``, ``grid`` and ``rows`` keys. Data goes
to ``--output`` or standard output, diagnostics to standard error.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import io
import json
import math
import os
import re
import sys
import tempfile
from pathlib import Path

import numpy as np

from aptsense import checks
from aptsense.dynamics import FockLindbladConfig, cross_validate
from aptsense.errors import InvalidParameters, NumericalFailure
from aptsense.laurent import analytic_laurent, numerical_residue, pole_order_fit
from aptsense.metrology import CovarianceMode, ProbeConfig, QcrbSweep, qcrb_sweep
from aptsense.model import (
    DEFAULT_EP_TOL,
    FullFrameParams,
    SystemParams,
    build_effective_hamiltonian,
    classify_phase,
    eigensystem,
)
from aptsense.transfer import critical_frequencies

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3

CONFIG_SECTIONS = ("model", "probe", "grid", "output", "dynamics")
CONFIG_ALIASES = {"gamma": "big_gamma"}

PRESETS = {
    "lossy": dict(omega_a=1.0, omega_b=0.0, big_gamma=1.0, gamma0=1.0),
    "decoupled": dict(omega_a=0.0, omega_b=0.0, big_gamma=0.0, gamma0=1.0),
    "ep-gain": dict(omega_a=2.0, omega_b=0.0, big_gamma=1.0, gamma0=-1.0),
}


class UsageError(Exception):
    pass


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.16e}"


def _json_value(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, str) or x is None:
        return x
    x = float(x)
    return x if math.isfinite(x) else repr(x)


class Table:
    def __init__(self, columns, rows, params=None, grid=None):
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]
        self.params = params or {}
        self.grid = grid

    def render(self, fmt_name: str) -> str:
        if fmt_name == "json":
            doc = {
                "params": {k: _json_value(v) for k, v in self.params.items()},
                "grid": self.grid,
                "rows": [{c: _json_value(v) for c, v in zip(self.columns, r)} for r in self.rows],
            }
            return json.dumps(doc, indent=1) + "\n"
        buf = io.StringIO()
        buf.write(",".join(self.columns) + "\n")
        for r in self.rows:
            buf.write(",".join(fmt(v) for v in r) + "\n")
        return buf.getvalue()


def parse_range(text: str, count_required: bool = True) -> tuple[float, float, int]:
    parts = text.split(":")
    try:
        if count_required and len(parts) == 3:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        elif not count_required and len(parts) == 2:
            start, stop, count = float(parts[0]), float(parts[1]), 0
        else:
            raise ValueError
    except ValueError:
        shape = "start:stop:count" if count_required else "lo:hi"
        raise argparse.ArgumentTypeError(f"expected {shape}, got {text!r}") from None
    if not start < stop:
        raise argparse.ArgumentTypeError(f"range start must be < stop in {text!r}")
    if count_required and count < 2:
        raise argparse.ArgumentTypeError(f"grid count must be >= 2 in {text!r}")
    return start, stop, count


def parse_window(text: str) -> tuple[float, float]:
    lo, hi, _ = parse_range(text, count_required=False)
    return lo, hi


def make_grid(bounds: tuple[float, float, int], log: bool) -> np.ndarray:
    start, stop, count = bounds
    if log:
        if start <= 0:
            raise UsageError("log spacing requires positive endpoints")
        return np.logspace(math.log10(start), math.log10(stop), count)
    return np.linspace(start, stop, count)


def parse_vector(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_model(p: argparse.ArgumentParser, gamma0=None, gamma_c=0.0, epsilon=True):
    p.add_argument("--delta", type=float, default=None, help="cavity detuning")
    p.add_argument("--Gamma", dest="big_gamma", type=float, default=1.0,
                   help="shared-bath coupling rate (default 1)")
    p.add_argument("--gamma0", type=float, default=gamma0, help="total cavity rate")
    p.add_argument("--gamma-c", dest="gamma_c", type=float, default=gamma_c)
    p.add_argument("--gamma-bath", dest="gamma_bath", type=float, default=None)
    if epsilon:
        p.add_argument("--epsilon", type=float, default=None,
                       help="perturbed EP: delta=(2+eps)Gamma, gamma0=-Gamma")


def _add_output(p: argparse.ArgumentParser):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", default=None, help="output path (default stdout)")
    p.add_argument("--config", default=None, help="INI file supplying defaults")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="aptsense", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("spectrum", help="eigenvalues over a detuning grid")
    _add_model(p, gamma0=1.0, epsilon=False)
    p.add_argument("--delta-range", type=parse_range, default=(-4.0, 4.0, 401))
    p.add_argument("--ep-tol", type=float, default=DEFAULT_EP_TOL)
    subs["spectrum"] = p

    p = sub.add_parser("phase", help="classify a single parameter point")
    _add_model(p, gamma0=1.0)
    p.add_argument("--ep-tol", type=float, default=DEFAULT_EP_TOL)
    subs["phase"] = p

    p = sub.add_parser("critical", help="critical frequencies and case label")
    _add_model(p)
    subs["critical"] = p

    p = sub.add_parser("qcrb", help="QFI/QCRB sweep over probe frequency")
    _add_model(p, gamma_c=0.5)
    p.add_argument("--omega-range", type=parse_range, default=(1e-4, 1e-1, 200))
    p.add_argument("--log", action="store_true", help="logarithmic grid spacing")
    p.add_argument("--offset-from-root", action="store_true",
                   help="shift the grid by the largest real critical frequency")
    p.add_argument("--mu-in", type=parse_vector, default=(2.0, 2.0, 0.0, 0.0))
    p.add_argument("--covariance", choices=[m.value for m in CovarianceMode],
                   default=CovarianceMode.SYMMETRIC_VACUUM.value)
    p.add_argument("--derivative-step", type=float, default=1e-6)
    p.add_argument("--derivative", choices=("central", "analytic"), default="central")
    subs["qcrb"] = p

    p = sub.add_parser("laurent", help="analytic vs numerical Laurent coefficient")
    _add_model(p)
    p.add_argument("--radii", type=parse_vector, default=(1e-2, 1e-3, 1e-4))
    subs["laurent"] = p

    p = sub.add_parser("pole-fit", help="log-log slope of a qcrb sweep")
    p.add_argument("--input", default=None, help="sweep file (default stdin)")
    p.add_argument("--omega0", type=float, default=0.0)
    p.add_argument("--window", type=parse_window, default=(1e-4, 1e-2))
    p.add_argument("--derivative-step", type=float, default=None,
                   help="overrides the step recorded in a JSON sweep (default 1e-6)")
    subs["pole-fit"] = p

    p = sub.add_parser("validate", help="time-domain oracles and invariant suites")
    p.add_argument("--preset", choices=sorted(PRESETS), default="lossy")
    p.add_argument("--alpha", type=float, default=0.2, help="coherent amplitude per mode")
    p.add_argument("--n-max", type=int, default=5)
    p.add_argument("--dt", type=float, default=0.005)
    p.add_argument("--t-final", type=float, default=2.0)
    subs["validate"] = p

    for p in subs.values():
        _add_output(p)
    return parser, subs


_NUMERIC_VALUE = re.compile(r"^-[\d.]")


def normalize_argv(argv: list[str]) -> list[str]:
    """Glue option values that start with '-' (e.g. ``-4:4:401``) to their flag."""
    out: list[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if (tok.startswith("--") and "=" not in tok and i + 1 < len(argv)
                and _NUMERIC_VALUE.match(argv[i + 1])):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def _find_config(argv: list[str]) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def apply_config(path: str, command: str, subparser: argparse.ArgumentParser) -> None:
    cfg = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            cfg.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc

    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for section in cfg.sections():
        if section not in CONFIG_SECTIONS and section != command:
            continue
        for key, raw in cfg.items(section):
            dest = CONFIG_ALIASES.get(key, key.replace("-", "_"))
            action = actions.get(dest)
            if action is None:
                if section == command:
                    raise UsageError(f"config key {key!r} is not an option of {command}")
                continue
            if isinstance(action, argparse._StoreTrueAction):
                try:
                    defaults[dest] = cfg.getboolean(section, key)
                except ValueError as exc:
                    raise UsageError(str(exc)) from exc
            elif action.type is not None:
                try:
                    defaults[dest] = action.type(raw)
                except (argparse.ArgumentTypeError, ValueError) as exc:
                    raise UsageError(f"config key {key!r}: {exc}") from exc
            else:
                defaults[dest] = raw
    subparser.set_defaults(**defaults)


def system_from_args(args, require_delta=True) -> SystemParams:
    if getattr(args, "epsilon", None) is not None:
        return SystemParams.from_epsilon(args.epsilon, args.big_gamma,
                                         gamma_c=args.gamma_c, gamma_bath=args.gamma_bath)
    if args.gamma0 is None or (require_delta and args.delta is None):
        raise UsageError("give --delta and --gamma0, or --epsilon")
    return SystemParams(delta=args.delta if args.delta is not None else 0.0,
                        big_gamma=args.big_gamma, gamma0=args.gamma0,
                        gamma_c=args.gamma_c, gamma_bath=args.gamma_bath)


def _params_dict(p: SystemParams) -> dict:
    return {"delta": p.delta, "big_gamma": p.big_gamma, "gamma0": p.gamma0,
            "gamma_c": p.gamma_c, "gamma_bath": p.gamma_bath}


def cmd_spectrum(args) -> Table:
    start, stop, count = args.delta_range
    rows = []
    for d in np.linspace(start, stop, count):
        p = SystemParams(delta=d, big_gamma=args.big_gamma, gamma0=args.gamma0)
        s = eigensystem(build_effective_hamiltonian(p), args.ep_tol)
        rows.append([d, s.lambda_plus.real, s.lambda_minus.real,
                     s.lambda_plus.imag, s.lambda_minus.imag])
    return Table(["delta", "re_lambda_plus", "re_lambda_minus", "im_lambda_plus", "im_lambda_minus"],
                 rows, {"big_gamma": args.big_gamma, "gamma0": args.gamma0},
                 {"delta": {"start": start, "stop": stop, "count": count}})


def cmd_phase(args) -> Table:
    p = system_from_args(args)
    phase = classify_phase(p, args.ep_tol)
    return Table(["delta", "big_gamma", "gamma0", "phase"],
                 [[p.delta, p.big_gamma, p.gamma0, phase.value]], _params_dict(p))


def cmd_critical(args) -> Table:
    p = system_from_args(args)
    c = critical_frequencies(p)
    roots = ";".join(fmt(w) for w in c.real_roots)
    return Table(
        ["case_label", "omega_sq_plus_re", "omega_sq_plus_im", "omega_sq_minus_re",
         "omega_sq_minus_im", "n_real_roots", "real_roots"],
        [[c.case_label.value, c.omega_sq_plus.real, c.omega_sq_plus.imag,
          c.omega_sq_minus.real, c.omega_sq_minus.imag, len(c.real_roots), roots]],
        _params_dict(p),
    )


def sweep_table(sweep: QcrbSweep, grid_meta: dict | None = None) -> Table:
    params = _params_dict(sweep.params) if sweep.params is not None else {}
    params.update({
        "mu_in": ";".join(fmt(v) for v in sweep.probe.mu_in),
        "covariance_mode": sweep.probe.covariance_mode.value,
        "derivative_step": sweep.probe.derivative_step,
    })
    return Table(["omega", "qfi", "qcrb", "flagged"], sweep.rows(), params, grid_meta)


def cmd_qcrb(args) -> Table:
    p = system_from_args(args)
    if len(args.mu_in) != 4:
        raise UsageError("--mu-in needs four comma-separated numbers")
    probe = ProbeConfig(args.mu_in, CovarianceMode(args.covariance), args.derivative_step)
    probe.check_against(p)
    grid = make_grid(args.omega_range, args.log)
    shift = 0.0
    if args.offset_from_root:
        roots = critical_frequencies(p).real_roots
        if not roots:
            raise UsageError("--offset-from-root needs a real critical frequency")
        shift = max(roots)
        grid = grid + shift
    sweep = qcrb_sweep(p, grid, probe, args.derivative)
    start, stop, count = args.omega_range
    meta = {"start": start, "stop": stop, "count": count,
            "spacing": "log" if args.log else "linear", "shift": shift}
    return sweep_table(sweep, meta)


def cmd_laurent(args) -> Table:
    p = system_from_args(args)
    exp = analytic_laurent(p)
    est = numerical_residue(p, exp.omega0, exp.order_m, args.radii)
    rows = []
    for i in range(4):
        for j in range(4):
            a, n = exp.coefficient[i, j], est.limit[i, j]
            rows.append([exp.case_label.value, exp.omega0, exp.order_m, i, j, a, n, abs(a - n)])
    params = _params_dict(p)
    params["two_sided_gap"] = est.two_sided_gap
    return Table(["case_label", "omega0", "order_m", "row", "col", "analytic", "numerical", "abs_diff"],
                 rows, params)


def read_sweep(text: str, derivative_step: float | None) -> QcrbSweep:
    """Parse a ``qcrb`` table (CSV or JSON) back into a sweep."""
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        rows = doc["rows"]
        omega = [float(r["omega"]) for r in rows]
        qfi = [float(r["qfi"]) for r in rows]
        qcrb = [float(r["qcrb"]) for r in rows]
        flagged = [bool(r["flagged"]) for r in rows]
        step = doc.get("params", {}).get("derivative_step", 1e-6)
    else:
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise UsageError("empty sweep input")
        header = lines[0].split(",")
        try:
            idx = {c: header.index(c) for c in ("omega", "qfi", "qcrb", "flagged")}
        except ValueError as exc:
            raise UsageError(f"sweep header is missing a column: {exc}") from exc
        cols = [ln.split(",") for ln in lines[1:]]
        omega = [float(c[idx["omega"]]) for c in cols]
        qfi = [float(c[idx["qfi"]]) for c in cols]
        qcrb = [float(c[idx["qcrb"]]) for c in cols]
        flagged = [c[idx["flagged"]].strip() not in ("0", "false", "False") for c in cols]
        step = 1e-6
    if derivative_step is not None:
        step = derivative_step
    return QcrbSweep(None, ProbeConfig(derivative_step=float(step)), np.array(omega),
                     np.array(qfi), np.array(qcrb), np.array(flagged, dtype=bool))


def cmd_pole_fit(args) -> Table:
    if args.input is None:
        text = sys.stdin.read()
    else:
        try:
            text = Path(args.input).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(str(exc)) from exc
    try:
        sweep = read_sweep(text, args.derivative_step)
    except (ValueError, KeyError) as exc:
        raise UsageError(f"cannot parse sweep: {exc}") from exc
    fit = pole_order_fit(sweep, args.omega0, args.window)
    return Table(["m_estimate", "intercept", "r_squared", "window_lo", "window_hi", "n_points"],
                 [[fit.m_estimate, fit.intercept, fit.r_squared, fit.window[0], fit.window[1],
                   fit.n_points]], {"omega0": args.omega0})


def cmd_validate(args) -> tuple[Table, bool]:
    preset = PRESETS[args.preset]
    wa, wb = preset["omega_a"], preset["omega_b"]
    system = SystemParams(delta=wa - wb, big_gamma=preset["big_gamma"], gamma0=preset["gamma0"])
    frame = FullFrameParams(wa, wb, system)
    cfg = FockLindbladConfig(alpha_a=args.alpha, alpha_b=args.alpha, n_max=args.n_max,
                             dt=args.dt, t_final=args.t_final)
    report = cross_validate(frame, cfg)
    rows = []
    for name, leg in report.legs.items():
        rows.append([f"dynamics:{name}", leg.get("max_deviation", float("nan")),
                     leg.get("threshold", float("nan")), leg["status"]])
    suite = checks.run_invariant_suite()
    for res in suite:
        rows.append([f"invariant:{res.name}", res.value, res.threshold,
                     "pass" if res.passed else "fail"])
    ok = report.passed and all(r.passed for r in suite)
    params = {"preset": args.preset, "omega_a": wa, "omega_b": wb, **_params_dict(system)}
    return Table(["check", "value", "threshold", "status"], rows, params), ok


COMMANDS = {
    "spectrum": cmd_spectrum,
    "phase": cmd_phase,
    "critical": cmd_critical,
    "qcrb": cmd_qcrb,
    "laurent": cmd_laurent,
    "pole-fit": cmd_pole_fit,
}


def write_output(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent or ".", prefix=f".{target.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_command(argv=None) -> int:
    argv = normalize_argv(list(sys.argv[1:] if argv is None else argv))
    parser, subs = build_parser()
    try:
        command = next((tok for tok in argv if tok in subs), None)
        config = _find_config(argv)
        if config is not None and command is not None:
            apply_config(config, command, subs[command])
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    except UsageError as exc:
        print(f"aptsense: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        if args.command == "validate":
            table, ok = cmd_validate(args)
            text = table.render(args.format)
            if not ok:
                sys.stderr.write(text)
                print("aptsense: validation failed", file=sys.stderr)
                return EXIT_NUMERICAL
        else:
            text = COMMANDS[args.command](args).render(args.format)
    except (UsageError, InvalidParameters) as exc:
        print(f"aptsense: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        print(f"aptsense: numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    try:
        write_output(text, args.output)
    except OSError as exc:
        print(f"aptsense: error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def main() -> None:
    raise SystemExit(run_command())


if __name__ == "__main__":
    main()
