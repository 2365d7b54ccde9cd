"""Command-line front end: ``twinbeam {evolve,threshold,fidelity,fig1,oracle}``.

Exit codes: 0 success, 1 usage error, 2 numerical/tolerance failure,
3 infinite separability threshold (informational).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from twinbeam import fock_oracle
from twinbeam.channel import ChannelParams, evolve, evolve_by_convolution
from twinbeam.errors import AccuracyError, DomainError, TruncationError
from twinbeam.gaussian_core import (
    PhasePoint,
    TwinBeamParams,
    twin_beam_from_lambda,
    twin_beam_from_photon_number,
    wigner_eval,
)
from twinbeam.separability import (
    NEVER_SEPARABLE,
    threshold_curve,
    threshold_tau,
    threshold_time,
    variance_criterion,
)
from twinbeam.teleportation import (
    CLASSICAL_FIDELITY,
    TeleportationParams,
    fidelity,
    quantum_teleportation_possible,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_INFINITE = 3

ORACLE_TOLERANCE = 1e-5
FIG1_M_VALUES = (0.1, 0.3, 0.7, 1.0)
ORACLE_GRID = {
    "lam": (0.2, 0.4, 0.6),
    "m_thermal": (0.1, 0.5, 1.0),
    "gamma_t": (0.1, 0.5, 1.0),
}
INFINITE = "infinite"

logger = logging.getLogger("twinbeam")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class RunConfig:
    twin_beam: TwinBeamParams | None
    channel: ChannelParams
    times: tuple[float, ...] | None
    eta: float
    fmt: str
    out: str | None
    seed: int


def _times(args) -> tuple[float, ...] | None:
    grid = (args.t_start, args.t_stop, args.t_steps)
    if args.t is not None:
        if any(v is not None for v in grid):
            raise UsageError("--t cannot be combined with --t-start/--t-stop/--t-steps")
        return (args.t,)
    if all(v is None for v in grid):
        return None
    if any(v is None for v in grid):
        raise UsageError("a time grid needs all of --t-start, --t-stop and --t-steps")
    if args.t_steps < 1:
        raise UsageError("--t-steps must be >= 1")
    if args.t_steps == 1:
        return (args.t_start,)
    if not args.t_stop > args.t_start:
        raise UsageError("time grid must be strictly increasing (--t-stop > --t-start)")
    return tuple(float(t) for t in np.linspace(args.t_start, args.t_stop, args.t_steps))


def build_config(args) -> RunConfig:
    try:
        if args.lam is not None:
            tb = twin_beam_from_lambda(args.lam)
        elif args.n_mean is not None:
            tb = twin_beam_from_photon_number(args.n_mean)
        else:
            tb = None
        cp = ChannelParams(gamma_rate=args.gamma_rate, m_thermal=args.thermal_m)
        times = _times(args)
        if times is not None and any(not math.isfinite(t) or t < 0 for t in times):
            raise UsageError("times must be finite and >= 0")
        TeleportationParams(args.eta)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    return RunConfig(tb, cp, times, args.eta, args.format, args.out, args.seed)


def _require_twin_beam(cfg: RunConfig) -> TwinBeamParams:
    if cfg.twin_beam is None:
        raise UsageError("one of --lambda or --n-mean is required")
    return cfg.twin_beam


def _require_times(cfg: RunConfig) -> tuple[float, ...]:
    if cfg.times is None:
        raise UsageError("give --t or a grid --t-start/--t-stop/--t-steps")
    return cfg.times


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    value = float(value)
    return INFINITE if math.isinf(value) else value


def _csv_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render(columns, rows, fmt: str) -> str:
    """Serialize a table as CSV (header, LF line endings) or a JSON list of records."""
    rows = [[_cell(v) for v in row] for row in rows]
    if fmt == "json":
        return json.dumps([dict(zip(columns, row)) for row in rows], indent=1) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_csv_cell(v) for v in row])
    return buf.getvalue()


def _emit(text: str, cfg: RunConfig) -> None:
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_evolve(cfg: RunConfig) -> int:
    tb = _require_twin_beam(cfg)
    tp = TeleportationParams(cfg.eta)
    columns = ("t", "tau", "sigma_plus_sq", "sigma_minus_sq", "separable", "fidelity")
    rows = []
    for t in _require_times(cfg):
        res = evolve(tb, cfg.channel, t)
        rows.append(
            (
                res.time,
                res.tau,
                res.variances.var_plus,
                res.variances.var_minus,
                variance_criterion(res.variances).separable,
                fidelity(tb, cfg.channel, t, tp),
            )
        )
    _emit(render(columns, rows, cfg.fmt), cfg)
    return EXIT_OK


def cmd_threshold(cfg: RunConfig) -> int:
    tb = _require_twin_beam(cfg)
    t_s = threshold_time(tb, cfg.channel)
    tau_s = threshold_tau(tb, cfg.channel)
    _emit(render(("t_s", "tau_s"), [(t_s, tau_s)], cfg.fmt), cfg)
    if t_s == NEVER_SEPARABLE:
        print("separability threshold: infinite (entanglement survives a pure-loss channel)", file=sys.stderr)
        return EXIT_INFINITE
    print(f"separability threshold: t_s = {t_s:.6g}, tau_s = {tau_s:.6g}", file=sys.stderr)
    return EXIT_OK


def cmd_fidelity(cfg: RunConfig) -> int:
    tb = _require_twin_beam(cfg)
    tp = TeleportationParams(cfg.eta)
    rows = []
    for t in _require_times(cfg):
        f = fidelity(tb, cfg.channel, t, tp)
        if cfg.eta == 1.0:
            quantum = quantum_teleportation_possible(tb, cfg.channel, t)
        else:
            quantum = f > CLASSICAL_FIDELITY
        rows.append((t, f, quantum))
    _emit(render(("t", "fidelity", "quantum"), rows, cfg.fmt), cfg)
    for t, f, quantum in rows:
        print(f"t = {t:g}: F = {f:.6f} ({'quantum' if quantum else 'classical'})", file=sys.stderr)
    return EXIT_OK


def cmd_fig1(cfg: RunConfig, n_stop: float, n_steps: int, m_values) -> int:
    n_values = np.linspace(0.0, n_stop, n_steps)
    curves = [threshold_curve(n_values, ChannelParams(cfg.channel.gamma_rate, m)) for m in m_values]
    columns = ("N", *(f"t_s(M={m:g})" for m in m_values))
    rows = [(float(n), *(float(c[i]) for c in curves)) for i, n in enumerate(n_values)]
    _emit(render(columns, rows, cfg.fmt), cfg)
    return EXIT_OK


ORACLE_COLUMNS = (
    "lambda", "thermal_m", "gamma_t", "dim",
    "sigma_plus_sq_closed", "sigma_plus_sq_oracle",
    "sigma_minus_sq_closed", "sigma_minus_sq_oracle",
    "abs_diff_plus", "abs_diff_minus",
    "pt_min_eigenvalue", "separable_closed", "separable_oracle", "ppt_agree",
    "wigner_closed", "wigner_mc", "wigner_mc_stderr",
)


def _oracle_row(job):
    lam, m, gamma_rate, t, dim, step, seed, mc_samples = job
    tb = twin_beam_from_lambda(lam)
    cp = ChannelParams(gamma_rate, m)
    cmp = fock_oracle.compare_point(tb, cp, t, dim=dim, step=step)
    if t > 0:
        origin = PhasePoint(0.0, 0.0, 0.0, 0.0)
        w_closed = wigner_eval(cmp.closed, origin)
        w_mc, w_err = evolve_by_convolution(tb, cp, t, origin, mc_samples, seed, return_stderr=True)
    else:
        w_closed = w_mc = w_err = float("nan")
    return (
        lam, m, gamma_rate * t, cmp.dim,
        cmp.closed.var_plus, cmp.oracle.var_plus,
        cmp.closed.var_minus, cmp.oracle.var_minus,
        cmp.diff_plus, cmp.diff_minus,
        cmp.pt_min_eigenvalue, cmp.closed_separable, cmp.oracle_separable,
        cmp.signs_agree or cmp.near_boundary,
        w_closed, w_mc, w_err,
    )


def cmd_oracle(cfg: RunConfig, dim, step, mc_samples: int, jobs: int) -> int:
    gamma_rate = cfg.channel.gamma_rate
    if cfg.twin_beam is None:
        points = [
            (lam, m, gt / gamma_rate)
            for lam in ORACLE_GRID["lam"]
            for m in ORACLE_GRID["m_thermal"]
            for gt in ORACLE_GRID["gamma_t"]
        ]
    else:
        points = [(cfg.twin_beam.lam, cfg.channel.m_thermal, t) for t in _require_times(cfg)]
    work = [(lam, m, gamma_rate, t, dim, step, cfg.seed, mc_samples) for lam, m, t in points]
    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                rows = list(pool.map(_oracle_row, work))
        else:
            rows = [_oracle_row(job) for job in work]
    except TruncationError as exc:
        print(f"truncation error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except AccuracyError as exc:
        print(f"accuracy error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    _emit(render(ORACLE_COLUMNS, rows, cfg.fmt), cfg)
    worst = max(max(r[8], r[9]) for r in rows)
    agree = all(r[13] for r in rows)
    print(f"oracle: max |closed - oracle| = {worst:.3g}, PPT signs agree: {agree}", file=sys.stderr)
    return EXIT_OK if worst < ORACLE_TOLERANCE and agree else EXIT_NUMERICAL


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    beam = p.add_mutually_exclusive_group()
    beam.add_argument("--lambda", dest="lam", type=float, help="twin-beam squeezing parameter")
    beam.add_argument("--n-mean", type=float, help="twin-beam total mean photon number")
    p.add_argument("--gamma-rate", type=float, default=1.0, help="damping rate (default 1)")
    p.add_argument("--thermal-m", type=float, default=0.0, help="thermal photons M (default 0)")
    p.add_argument("--t", type=float, help="single time")
    p.add_argument("--t-start", type=float)
    p.add_argument("--t-stop", type=float)
    p.add_argument("--t-steps", type=int)
    p.add_argument("--eta", type=float, default=1.0, help="efficiency in the fidelity formula")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    p.add_argument("--seed", type=int, default=0, help="seed for Monte-Carlo checks")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def make_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = _Parser(prog="twinbeam", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("evolve", parents=[common], help="variances, separability and fidelity vs time")
    sub.add_parser("threshold", parents=[common], help="separability threshold time")
    sub.add_parser("fidelity", parents=[common], help="coherent-state teleportation fidelity")
    fig1 = sub.add_parser("fig1", parents=[common], help="threshold t_s * Gamma vs photon number")
    fig1.add_argument("--n-stop", type=float, default=20.0)
    fig1.add_argument("--n-steps", type=int, default=201)
    fig1.add_argument("--m-values", type=float, nargs="+", default=list(FIG1_M_VALUES))
    oracle = sub.add_parser("oracle", parents=[common], help="Fock-space master-equation cross-check")
    oracle.add_argument("--dim", type=int, help="Fock levels per mode (default: automatic)")
    oracle.add_argument("--step", type=float, help="maximum RK4 step")
    oracle.add_argument("--mc-samples", type=int, default=100_000)
    oracle.add_argument("--jobs", type=int, default=1)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        cfg = build_config(args)
        if args.command == "evolve":
            return cmd_evolve(cfg)
        if args.command == "threshold":
            return cmd_threshold(cfg)
        if args.command == "fidelity":
            return cmd_fidelity(cfg)
        if args.command == "fig1":
            if args.n_steps < 2 or not args.n_stop > 0:
                raise UsageError("fig1 needs --n-stop > 0 and --n-steps >= 2")
            return cmd_fig1(cfg, args.n_stop, args.n_steps, args.m_values)
        return cmd_oracle(cfg, args.dim, args.step, args.mc_samples, args.jobs)
    except (UsageError, DomainError) as exc:
        print(f"twinbeam {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
