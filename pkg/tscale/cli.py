import argparse
import asyncio
import json
import logging
import sys
import attr
from . import __version__
from .base import Verdict
from .coefficients import Coefficient
from .certify import bound_path, certify, region_heatmap, sweep
from .config import (
    RunConfig,
    SweepConfig,
    coefficient_from_doc,
    delay_spec_from_doc,
    scale_from_doc,
)
from .core import load_settings
from .exceptions import (
    CertifyError,
    ConfigError,
    ExponentialError,
    RootError,
    ShiftError,
    SimulationError,
    TimeScaleError,
)
from .halanay import root_field
from .shifts import validate_delay_function, validate_shift_axioms
from .simulate import simulate
from .tsexp import exp_bounds_check, exp_ts, log_exp
from .utils import doc_digest, load_docs, write_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FAILED = 2


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _window(text):
    values = _floats(text)
    if len(values) != 2 or values[0] >= values[1]:
        raise argparse.ArgumentTypeError("window must be LO,HI with LO < HI")
    return tuple(values)


def _headers(command, seed, digest):
    return [("tscale", __version__), ("command", command), ("seed", seed), ("config", digest)]


def _policy(settings, step):
    policy = settings.policy
    return attr.evolve(policy, dense_step=step) if step else policy


def cmd_exp(args, settings):
    scale_doc = load_docs(args.scale)
    ts = scale_from_doc(scale_doc, settings.membership_rtol)
    p = coefficient_from_doc(args.p, "/p")
    policy = _policy(settings, args.step)
    rows = [
        ("value", exp_ts(ts, p, args.to, args.start, policy), ""),
        ("log_value", log_exp(ts, p, args.to, args.start, policy), ""),
    ]
    passed = True
    lo, hi = min(args.start, args.to), max(args.start, args.to)
    if p.is_constant:
        phi = Coefficient.const(abs(p.value))
    else:
        phi = p if p(lo) >= 0 else None
    if phi is not None:
        try:
            report = exp_bounds_check(ts, phi, lo, hi, policy)
        except ExponentialError as e:
            logger.info("bounds not checked: %s", e)
        else:
            passed = report.passed
            rows += [(c.name, c.worst_margin, c.passed) for c in report.checks]
    digest = doc_digest(scale_doc, args.p, args.start, args.to)
    write_csv(rows, ["quantity", "value", "passed"], _headers("exp", args.seed, digest), args.out)
    return EXIT_OK if passed else EXIT_FAILED


def _run_config(args, settings):
    return RunConfig.load(args.scale, args.problem, getattr(args, "history", "const:1.0"),
                          settings, policy=_policy(settings, getattr(args, "step", None)))


def cmd_sim(args, settings):
    config = _run_config(args, settings)
    ts, problem, rhs, history = config.build()
    traj = simulate(ts, problem.spec, rhs, history, args.tend, config.policy)
    write_csv(traj.rows(), ["t", "x", "mu", "kind"], _headers("sim", args.seed, config.digest),
              args.out)
    return EXIT_OK


def cmd_root(args, settings):
    config = _run_config(args, settings)
    ts, problem, rhs, history = config.build()
    tol = args.tol or settings.root_tol
    field = root_field(problem, args.grid, tol, settings.s_floor)
    write_csv(field.rows(), ["t", "lambda", "residual", "s_lower"],
              _headers("root", args.seed, config.digest), args.out)
    for t, message in field.errors.items():
        print(f"no root at t={t!r}: {message}", file=sys.stderr)
    return EXIT_FAILED if field.partial else EXIT_OK


def cmd_certify(args, settings):
    config = _run_config(args, settings)
    ts, problem, rhs, history = config.build()
    cert, traj = certify(problem, rhs, history, args.tend, config.policy, config.root_step,
                         config.tol, rate=args.rate, floor=config.floor, seed=args.seed)
    cert.digest = config.digest
    print(json.dumps(cert.to_dict(), indent=2, sort_keys=True, allow_nan=False))
    if traj is not None:
        field = cert.root_field.envelope() if args.rate == "envelope" else cert.root_field
        states = dict(zip(traj.times, traj.values))
        rows = [(t, states[t], bound, bound - abs(states[t]))
                for t, bound in bound_path(traj, field, cert.K0)]
        write_csv(rows, ["t", "x", "bound", "margin"],
                  _headers("certify", args.seed, config.digest), args.out)
    return EXIT_OK if cert.verdict is Verdict.Certified else EXIT_FAILED


def cmd_sweep(args, settings):
    config = SweepConfig.load(args.grid, settings)
    frame = asyncio.run(
        sweep(
            config.template,
            config.grid,
            config.history(),
            config.horizon,
            config.run.policy,
            config.run.root_step,
            config.run.tol,
            workers=settings.workers,
        )
    )
    write_csv(frame.itertuples(index=False), list(frame.columns),
              _headers("sweep", args.seed, config.digest), args.out)
    if args.svg:
        region_heatmap(frame, config.x, config.y, args.svg)
    errors = frame[frame["verdict"] == "Error"]
    for _, row in errors.iterrows():
        logger.warning("sweep cell failed: %s", row["error"])
    return EXIT_OK


def cmd_validate_shift(args, settings):
    config = RunConfig.load(args.scale, args.problem, settings=settings)
    spec = delay_spec_from_doc(config.problem_doc, config.scale)
    reports = [
        validate_shift_axioms(spec.shift, args.samples, args.seed, args.window),
        validate_delay_function(spec, args.window, args.samples, args.seed),
    ]
    rows = [
        (report.title, c.name, c.passed, c.samples, c.worst_margin, repr(c.witness), c.detail)
        for report in reports
        for c in report.checks
    ]
    write_csv(rows, ["report", "check", "passed", "samples", "worst_margin", "witness", "detail"],
              _headers("validate-shift", args.seed, config.digest), args.out)
    failed = [c.name for report in reports for c in report.failures()]
    for name in failed:
        print(f"FAILED: {name}", file=sys.stderr)
    return EXIT_FAILED if failed else EXIT_OK


def build_parser(settings):
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=settings.seed)
    common.add_argument("--log-level", default=None)
    common.add_argument("--out", default=None, help="write CSV here instead of stdout")

    parser = argparse.ArgumentParser(prog="ts", description="time scale delay equations")
    parser.add_argument("--version", action="version", version=f"tscale {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exp", parents=[common], help="time scale exponential and its bounds")
    p.add_argument("--scale", required=True)
    p.add_argument("--p", required=True, help="const:VALUE or table:FILE")
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", type=float, required=True)
    p.add_argument("--step", type=float, default=None)
    p.set_defaults(func=cmd_exp)

    p = sub.add_parser("sim", parents=[common], help="simulate a delay dynamic equation")
    p.add_argument("--scale", required=True)
    p.add_argument("--problem", required=True)
    p.add_argument("--history", default="const:1.0", help="const:VALUE or csv:FILE")
    p.add_argument("--tend", type=float, required=True)
    p.add_argument("--step", type=float, default=None)
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("root", parents=[common], help="largest characteristic roots")
    p.add_argument("--scale", required=True)
    p.add_argument("--problem", required=True)
    p.add_argument("--grid", type=_floats, required=True, help="t1,t2,...")
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=cmd_root)

    p = sub.add_parser("certify", parents=[common], help="certify exponential decay")
    p.add_argument("--scale", required=True)
    p.add_argument("--problem", required=True)
    p.add_argument("--history", default="const:1.0")
    p.add_argument("--tend", type=float, required=True)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--rate", choices=["envelope", "pointwise"], default="envelope")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("sweep", parents=[common], help="certify over a parameter grid")
    p.add_argument("--grid", required=True, help="sweep grid document")
    p.add_argument("--svg", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate-shift", parents=[common], help="check shifts and delays")
    p.add_argument("--scale", required=True)
    p.add_argument("--problem", required=True, help="document with shift and delays")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--window", type=_window, default=None, help="LO,HI")
    p.set_defaults(func=cmd_validate_shift)
    return parser


def main(argv=None):
    try:
        settings = load_settings()
    except (ValueError, EnvironmentError) as e:
        print(f"settings error: {e}", file=sys.stderr)
        return EXIT_ERROR
    args = build_parser(settings).parse_args(argv)
    logging.basicConfig(
        level=(args.log_level or settings.log_level).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args, settings)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
    except (TimeScaleError, ShiftError, ExponentialError, RootError, SimulationError,
            CertifyError) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
    return EXIT_ERROR


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
