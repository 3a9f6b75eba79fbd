# -*- coding: utf-8 -*-
"""
``volterra-stealth`` command line: ``simulate``, ``check`` and ``sweep``.

Exit codes: 0 success, 1 a condition check failed, 2 configuration or usage
error, 3 numerical failure.
"""

import argparse
import csv
import itertools
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from .attack import stealth_verdict, verdict_to_dict
from .closedloop import (
    build_kernels,
    cross_validate,
    export_trajectories_csv,
    simulate,
)
from .conditions import run_checks
from .config import PRESETS, config_from_dict, config_hash, read_document
from .core import ConfigError
from .handlers import EXIT_CONDITION_FAILED, exit_codes, resolve_config, write_json
from .plots import plot_signals
from .stm import WARN_KERNEL_NODES

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = [
    "a",
    "h",
    "q",
    "sup_uq",
    "tail_max",
    "is_epsilon_stealthy",
    "is_untraceable",
    "tail_trend",
    "growth_detected_at",
    "stealth_class",
]


def _out_dir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


@exit_codes
@resolve_config
def cmd_simulate(args):
    config = args.system
    out = _out_dir(args)
    digest = config_hash(config)
    trajectories = simulate(config)
    export_trajectories_csv(trajectories, os.path.join(out, "trajectories.csv"))
    tolerances = config.tolerances
    verdict = stealth_verdict(trajectories.u_q, config.epsilon, config.tail_fraction, tolerances)
    uc_verdict = stealth_verdict(
        trajectories.u_c, config.epsilon, config.tail_fraction, tolerances, signal="u_c"
    )
    payload = verdict_to_dict(verdict, trajectories.grid, digest)
    payload["u_c"] = verdict_to_dict(uc_verdict, trajectories.grid)
    payload["growth_detected_at"] = trajectories.growth_detected_at

    run_lvie = args.lvie == "always" or (
        args.lvie == "auto"
        and config.grid.n <= WARN_KERNEL_NODES + 1
        and trajectories.growth_detected_at is None
    )
    if run_lvie:
        payload["cross_validation"] = cross_validate(config, trajectories=trajectories).to_dict()
    elif args.lvie == "auto":
        logger.warning(
            "skipping the LVIE cross-check on %s nodes; pass --lvie always to force it",
            config.grid.n,
        )

    write_json(os.path.join(out, "verdict.json"), payload)
    if args.plots:
        plot_signals(trajectories.signals(), out)
    print(
        "sup|u_q| = {:.6g}  epsilon-stealthy: {}  untraceable: {}  tail: {}".format(
            verdict.sup, verdict.is_epsilon_stealthy, verdict.is_untraceable, verdict.trend
        )
    )


@exit_codes
@resolve_config
def cmd_check(args):
    config = args.system
    out = _out_dir(args)
    kernels = build_kernels(config)
    report = run_checks(config, kernels, absolute=args.absolute)
    payload = report.to_dict()
    payload["config_hash"] = config_hash(config)
    write_json(os.path.join(out, "conditions.json"), payload)
    print(report.to_table())
    if report.failed:
        logger.warning("failed conditions: %s", ", ".join(report.failed))
        return EXIT_CONDITION_FAILED


def stealth_class(row):
    if row["is_untraceable"]:
        return "untraceable"
    if row["tail_trend"] == "growing" or row["growth_detected_at"] is not None:
        return "unbounded"
    if row["is_epsilon_stealthy"]:
        return "eps-stealthy"
    return "not-stealthy"


def sweep_row(document):
    """Simulate one sweep point; ``document`` is a config mapping so it pickles."""
    config = config_from_dict(document)
    trajectories = simulate(config)
    verdict = stealth_verdict(
        trajectories.u_q, config.epsilon, config.tail_fraction, config.tolerances
    )
    row = {
        "a": config.attack.a,
        "h": config.attack.h,
        "q": config.q,
        "sup_uq": verdict.sup,
        "tail_max": verdict.tail_max,
        "is_epsilon_stealthy": verdict.is_epsilon_stealthy,
        "is_untraceable": verdict.is_untraceable,
        "tail_trend": verdict.trend,
        "growth_detected_at": trajectories.growth_detected_at,
    }
    row["stealth_class"] = stealth_class(row)
    return row


def _sweep_values(args):
    values = {}
    if args.sweep:
        listed = read_document(args.sweep)
        if not isinstance(listed, dict):
            raise ConfigError("sweep file must hold an object with 'a', 'h' and optional 'q'")
        values.update(listed)
    for key, flag in (("a", args.a_values), ("h", args.h_values), ("q", args.q_values)):
        if flag is not None:
            values[key] = flag
    for key in ("a", "h"):
        if not values.get(key):
            raise ConfigError("sweep needs a non-empty list of {}-values".format(key))
    if "q" in values and not values["q"]:
        raise ConfigError("sweep q-values must not be empty")
    return values


def sweep_documents(base, values):
    q_values = values.get("q") or [base["q"]]
    documents = []
    for a, h, q in itertools.product(values["a"], values["h"], q_values):
        document = dict(base, q=q, attack={"a": a, "h": h})
        documents.append(document)
    return documents


def summary_matrix(rows):
    """Stealth classes keyed by ``(a, q)`` as a text table."""
    a_values = sorted({r["a"] for r in rows})
    q_values = sorted({r["q"] for r in rows})
    cells = {}
    for row in rows:
        classes = cells.setdefault((row["a"], row["q"]), [])
        if row["stealth_class"] not in classes:
            classes.append(row["stealth_class"])
    lines = ["a \\ q  " + "  ".join("{:>14}".format("q={}".format(q)) for q in q_values)]
    for a in a_values:
        lines.append(
            "a={:<4}  ".format(a)
            + "  ".join(
                "{:>14}".format("/".join(cells.get((a, q), ["-"]))) for q in q_values
            )
        )
    return "\n".join(lines)


@exit_codes
@resolve_config
def cmd_sweep(args):
    if args.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    values = _sweep_values(args)
    documents = sweep_documents(args.document, values)
    for document in documents:
        config_from_dict(document)
    out = _out_dir(args)
    logger.info("sweeping %s configurations with %s jobs", len(documents), args.jobs)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(sweep_row, documents))
    else:
        rows = [sweep_row(document) for document in documents]
    with open(os.path.join(out, "sweep.csv"), "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(
                dict(row, growth_detected_at="" if row["growth_detected_at"] is None else row["growth_detected_at"])
            )
    print(summary_matrix(rows))


def _common_arguments():
    common = argparse.ArgumentParser(add_help=False)
    source = common.add_mutually_exclusive_group()
    source.add_argument("--config", help="configuration JSON file")
    source.add_argument("--preset", choices=sorted(PRESETS), help="built-in worked example")
    common.add_argument("--out", default=".", help="output directory (default: .)")
    common.add_argument("--dt", type=float, help="grid step")
    common.add_argument("--t-end", dest="t_end", type=float, help="horizon")
    common.add_argument("--attack-degree", dest="attack_degree", type=int, help="attack degree a")
    common.add_argument("--attack-weight", dest="attack_weight", type=float, help="attack weight h")
    common.add_argument("--epsilon", type=float, help="stealth threshold")
    common.add_argument(
        "--feedback-sign", dest="feedback_sign", type=int, choices=[1, -1], help="summing junction sign"
    )
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return common


def build_parser():
    common = _common_arguments()
    parser = argparse.ArgumentParser(
        prog="volterra-stealth",
        description="Stealthy polynomial attacks on LTV loops with integrator chains.",
    )
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    commands = parser.add_subparsers(dest="command")
    commands.required = True

    simulate_parser = commands.add_parser("simulate", parents=[common], help="simulate the attacked loop")
    simulate_parser.add_argument("--plots", action="store_true", help="write SVG plots")
    simulate_parser.add_argument(
        "--lvie",
        choices=["auto", "always", "never"],
        default="auto",
        help="LVIE cross-check (auto: only on grids up to {} nodes)".format(WARN_KERNEL_NODES + 1),
    )
    simulate_parser.set_defaults(func=cmd_simulate)

    check_parser = commands.add_parser("check", parents=[common], help="check the kernel conditions")
    check_parser.add_argument("--abs", dest="absolute", action="store_true", help="check |G| instead of G")
    check_parser.set_defaults(func=cmd_check)

    sweep_parser = commands.add_parser("sweep", parents=[common], help="sweep attack degree, weight and q")
    sweep_parser.add_argument("--sweep", help="JSON file with 'a', 'h' and optional 'q' lists")
    sweep_parser.add_argument("--a-values", dest="a_values", type=int, nargs="*")
    sweep_parser.add_argument("--h-values", dest="h_values", type=float, nargs="*")
    sweep_parser.add_argument("--q-values", dest="q_values", type=int, nargs="*")
    sweep_parser.add_argument("--jobs", type=int, default=1, help="worker processes (default: 1)")
    sweep_parser.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
