"""Command-line interface: ``simulate``, ``fit``, ``path``, ``select``, ``bench``, ``bounds``.

Exit status is 0 on success, 1 when an argument or input file is invalid and
2 when a computation fails. Every subcommand accepts ``--config FILE`` with
``key = value`` lines (keys are long flag names); explicit flags win over the
file. The default thread count comes from ``GGMCOMPOSITE_THREADS``.
"""

import argparse
import dataclasses
import logging
import os
import sys

from . import __version__
from . import io as gio
from ._accel import backend_name
from .bench import FRONTIER_FIELDS, METHODS, BenchSpec, run_bench, summarize
from .explore import InitConfig, SplitConfig, run_composite
from .gauss import cross_entropy, empirical_covariance, kl_divergence
from .glasso import default_rho_grid, glasso_path
from .mle import DEFAULT_LAMBDA, MleConfig
from .select import (
    DEFAULT_K, PENALTIES, build_report, concentration_check, pivot_residuals, regret_bounds,
)
from .seeding import DATA, TRUTH, derive_rng, derive_seed
from .simulate import CONNECTIVITY, GraphModelSpec, make_experiment

THREADS_ENV = "GGMCOMPOSITE_THREADS"

log = logging.getLogger("ggmcomposite")


class UsageError(Exception):
    """Bad flag, flag value or input file: exit status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _default_threads():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV}={raw!r} is not an integer") from None
    if value < 1:
        raise UsageError(f"{THREADS_ENV} must be >= 1")
    return value


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _seed_list(text):
    """``"5"`` means seeds 0..4; ``"3-7"`` an inclusive range; ``"1,4,9"`` a list."""
    try:
        if "," in text:
            return [int(v) for v in text.split(",") if v.strip()]
        if "-" in text:
            lo, hi = (int(v) for v in text.split("-", 1))
            return list(range(lo, hi + 1))
        return list(range(int(text)))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None


def _hub(text):
    try:
        center, degree = (int(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"hub must be CENTER:DEGREE, got {text!r}") from None
    return center, degree


def build_parser():
    p = _Parser(prog="ggmcomposite", description="Composite covariance selection for Gaussian graphical models.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({backend_name()} kernels)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="key = value file supplying defaults for the long flags")
        sp.add_argument("--out", required=True, help="output directory (created if missing)")

    def lam_flag(sp, default=DEFAULT_LAMBDA):
        sp.add_argument("--lam", type=float, default=default, help="ridge added to the covariance (default: %(default)s)")

    def threads_flag(sp):
        sp.add_argument("--threads", type=int, default=None,
                        help=f"worker threads (default: ${THREADS_ENV} or 1)")

    sp = sub.add_parser("simulate", help="draw a sparse ground truth and a dataset")
    common(sp)
    sp.add_argument("--p", type=int, default=30, help="dimension (default: %(default)s)")
    sp.add_argument("--n", type=int, default=30, help="rows (default: %(default)s)")
    sp.add_argument("--seed", type=int, default=0, help="master seed (default: %(default)s)")
    sp.add_argument("--connectivity", choices=sorted(CONNECTIVITY), default="sparse",
                    help="edge-probability preset (default: %(default)s)")
    sp.add_argument("--hub", type=_hub, default=None, help="hub as CENTER:DEGREE (default: none)")
    sp.add_argument("--off-diag", type=_floats, default=[0.2, 0.5],
                    help="LOW,HIGH magnitudes of precision off-diagonals (default: 0.2,0.5)")

    sp = sub.add_parser("fit", help="run the composite exploration and select by CVCE")
    common(sp)
    sp.add_argument("--data", required=True, help="dataset CSV")
    sp.add_argument("--init", choices=["nodewise", "file", "empty"], default="nodewise",
                    help="initial graph (default: %(default)s)")
    sp.add_argument("--init-graph", default=None, help="edge list for --init file")
    sp.add_argument("--penalty-multiplier", type=float, default=InitConfig.penalty_multiplier,
                    help="nodewise lasso penalty multiplier (default: %(default)s)")
    sp.add_argument("--steps", type=int, default=None, help="exploration steps (default: min(3p, free edges))")
    sp.add_argument("--validation-fraction", type=float, default=SplitConfig.validation_fraction,
                    help="share of rows held out for selection (default: %(default)s)")
    sp.add_argument("--evaluation-fraction", type=float, default=SplitConfig.evaluation_fraction,
                    help="share of exploration rows scoring candidates (default: %(default)s)")
    sp.add_argument("--seed", type=int, default=0, help="split seed (default: %(default)s)")
    lam_flag(sp)
    threads_flag(sp)

    sp = sub.add_parser("path", help="graphical lasso path with unpenalised refits")
    common(sp)
    sp.add_argument("--data", required=True, help="dataset CSV")
    sp.add_argument("--rhos", type=_floats, default=None, help="explicit comma-separated penalties")
    sp.add_argument("--grid-size", type=int, default=20, help="log grid size when --rhos is absent (default: %(default)s)")
    sp.add_argument("--ratio", type=float, default=100.0, help="largest / smallest penalty (default: %(default)s)")
    sp.add_argument("--truth", default=None, help="truth JSON; adds a KL column")
    lam_flag(sp)

    sp = sub.add_parser("select", help="score a trace by CVCE, true CE and GGMSC")
    common(sp)
    sp.add_argument("--trace", required=True, help="trace JSON from fit")
    sp.add_argument("--validation", default=None, help="validation rows CSV")
    sp.add_argument("--data", default=None,
                    help="full dataset CSV: enables GGMSC, and CVCE via the trace's validation rows")
    sp.add_argument("--truth", default=None, help="truth JSON (oracle column and regret)")
    sp.add_argument("--penalty", choices=sorted(PENALTIES), default="exact", help="GGMSC penalty (default: %(default)s)")
    sp.add_argument("--k", type=float, default=DEFAULT_K, help="GGMSC constant K (default: %(default)s)")
    lam_flag(sp, None)

    sp = sub.add_parser("bench", help="seed sweep comparing methods on shared data")
    common(sp)
    sp.add_argument("--p", type=int, default=30, help="dimension (default: %(default)s)")
    sp.add_argument("--n", type=int, default=30, help="rows per dataset (default: %(default)s)")
    sp.add_argument("--connectivity", choices=sorted(CONNECTIVITY), default="sparse",
                    help="edge-probability preset (default: %(default)s)")
    sp.add_argument("--seeds", type=_seed_list, default=list(range(10)),
                    help="N (seeds 0..N-1), A-B or a comma list (default: 10)")
    sp.add_argument("--methods", default=",".join(METHODS), help="comma subset of %s (default: all)" % ",".join(METHODS))
    sp.add_argument("--grid-size", type=int, default=20, help="glasso penalties per path (default: %(default)s)")
    sp.add_argument("--steps", type=int, default=None, help="composite steps (default: min(3p, free edges))")
    sp.add_argument("--validation-fraction", type=float, default=SplitConfig.validation_fraction,
                    help="composite validation share (default: %(default)s)")
    sp.add_argument("--evaluation-fraction", type=float, default=SplitConfig.evaluation_fraction,
                    help="composite evaluation share (default: %(default)s)")
    sp.add_argument("--penalty-multiplier", type=float, default=InitConfig.penalty_multiplier,
                    help="nodewise lasso penalty multiplier (default: %(default)s)")
    lam_flag(sp)
    threads_flag(sp)

    sp = sub.add_parser("bounds", help="regret bounds and Monte-Carlo concentration check for a trace")
    common(sp)
    sp.add_argument("--trace", required=True, help="trace JSON from fit")
    sp.add_argument("--truth", required=True, help="truth JSON")
    sp.add_argument("--validation", default=None, help="validation rows CSV")
    sp.add_argument("--data", default=None, help="full dataset CSV (validation rows taken from the trace)")
    sp.add_argument("--deltas", type=_floats, default=[0.01, 0.1, 1.0], help="regret levels (default: 0.01,0.1,1)")
    sp.add_argument("--draws", type=int, default=2000, help="Monte-Carlo validation draws (default: %(default)s)")
    sp.add_argument("--seed", type=int, default=0, help="Monte-Carlo seed (default: %(default)s)")
    lam_flag(sp, None)
    return p


# ---------------------------------------------------------------------------
# config file
# ---------------------------------------------------------------------------


def _read_config(path):
    out = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"--config: cannot read {path}: {exc.strerror}") from None
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"--config {path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("_", "-")] = value
    return out


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        config = _read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        given = {a.split("=", 1)[0] for a in argv if a.startswith("--")}
        extra = []
        known = {a.option_strings[0][2:] for a in sub._actions if a.option_strings and a.option_strings[0].startswith("--")}
        for key, value in config.items():
            if key not in known or key in ("config", "help"):
                raise UsageError(f"--config: unknown key {key!r} for '{args.command}'")
            if f"--{key}" not in given:
                extra += [f"--{key}", value]
        args = parser.parse_args(argv + extra)
    return args


# ---------------------------------------------------------------------------
# validation helpers
# ---------------------------------------------------------------------------


def _check(cond, flag, message):
    if not cond:
        raise UsageError(f"{flag}: {message}")


def _threads(args):
    t = args.threads if args.threads is not None else _default_threads()
    _check(t >= 1, "--threads", "must be >= 1")
    return t


def _fractions(args):
    try:
        return SplitConfig(args.validation_fraction, args.evaluation_fraction, getattr(args, "seed", 0))
    except ValueError as exc:
        flag = "--validation-fraction" if "validation" in str(exc) else "--evaluation-fraction"
        raise UsageError(f"{flag}: {exc}") from None


def _load(fn, path, flag):
    try:
        return fn(path)
    except gio.FormatError as exc:
        raise UsageError(f"{flag}: {exc}") from None
    except OSError as exc:
        raise UsageError(f"{flag}: cannot read {path}: {exc.strerror}") from None


def _lam(args, meta):
    lam = args.lam if args.lam is not None else meta.get("lam", DEFAULT_LAMBDA)
    _check(lam > 0, "--lam", "must be > 0")
    return float(lam)


def _validation_cov(args, trace, flag_required=False):
    if args.validation:
        val = _load(gio.read_dataset, args.validation, "--validation")
        _check(val.p == trace.graphs[0].p, "--validation", f"has p={val.p}, trace has p={trace.graphs[0].p}")
        return empirical_covariance(val), val.n
    if args.data:
        data = _load(gio.read_dataset, args.data, "--data")
        _check(data.p == trace.graphs[0].p, "--data", f"has p={data.p}, trace has p={trace.graphs[0].p}")
        _check(trace.validation_rows.size and trace.validation_rows.max() < data.n, "--data",
               "does not contain the trace's validation rows")
        return trace.validation_covariance(data), len(trace.validation_rows)
    if flag_required:
        raise UsageError("--validation: give --validation or --data")
    return None, None


def _truth(args, p):
    if not args.truth:
        return None
    truth = _load(gio.read_spd, args.truth, "--truth")
    _check(truth.p == p, "--truth", f"has p={truth.p}, expected {p}")
    try:
        truth.check(1e-6)
    except ValueError as exc:
        raise UsageError(f"--truth: {exc}") from None
    return truth


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(args):
    _check(args.p >= 2, "--p", "must be >= 2")
    _check(args.n >= 2, "--n", "must be >= 2")
    _check(args.seed >= 0, "--seed", "must be >= 0")
    _check(len(args.off_diag) == 2, "--off-diag", "needs exactly LOW,HIGH")
    try:
        spec = GraphModelSpec.preset(args.p, args.connectivity, hub=args.hub, off_diag_range=tuple(args.off_diag),
                                     seed=derive_seed(args.seed, TRUTH))
    except ValueError as exc:
        flag = "--hub" if "hub" in str(exc) else "--off-diag"
        raise UsageError(f"{flag}: {exc}") from None
    graph, truth, data = make_experiment(spec, args.n, derive_rng(args.seed, DATA))
    gio.write_dataset(os.path.join(args.out, "data.csv"), data)
    gio.write_json(os.path.join(args.out, "truth.json"), gio.spd_to_dict(truth))
    gio.write_graph(os.path.join(args.out, "truth_graph.txt"), graph)
    log.info("simulated %dx%d data, true graph with %d edges", data.n, data.p, len(graph))


def cmd_fit(args):
    data = _load(gio.read_dataset, args.data, "--data")
    split = _fractions(args)
    _check(args.seed >= 0, "--seed", "must be >= 0")
    _check(args.steps is None or args.steps >= 0, "--steps", "must be >= 0")
    _check(args.penalty_multiplier > 0, "--penalty-multiplier", "must be > 0")
    _check(args.lam > 0, "--lam", "must be > 0")
    threads = _threads(args)
    if args.init == "file":
        _check(args.init_graph, "--init-graph", "required with --init file")
        _load(lambda path: gio.read_graph(path, data.p), args.init_graph, "--init-graph")
    init = InitConfig(args.init, args.penalty_multiplier, args.init_graph)
    g0 = gio.read_graph(args.init_graph, data.p) if args.init == "file" else None
    mle_cfg = MleConfig(lam=args.lam)
    trace = run_composite(data, init, split, args.steps, mle_cfg, threads=threads, initial_graph=g0)
    s_val = trace.validation_covariance(data)
    report = build_report(trace, s_val)
    chosen = report.chosen["cvce"]
    meta = {"seed": args.seed, "lam": args.lam, "init": args.init, "penalty_multiplier": args.penalty_multiplier,
            "validation_fraction": split.validation_fraction, "evaluation_fraction": split.evaluation_fraction,
            "cvce_scores": report.cvce, "cvce_index": chosen}
    gio.write_json(os.path.join(args.out, "trace.json"), gio.trace_to_dict(trace, meta))
    gio.write_graph(os.path.join(args.out, "graph.txt"), trace.graphs[chosen])
    gio.write_dataset(os.path.join(args.out, "validation.csv"), data.subset(trace.validation_rows))
    log.info("trace of %d graphs, CVCE picked index %d (%d edges)", len(trace), chosen, len(trace.graphs[chosen]))


def cmd_path(args):
    data = _load(gio.read_dataset, args.data, "--data")
    _check(args.lam > 0, "--lam", "must be > 0")
    s = empirical_covariance(data)
    if args.rhos is not None:
        _check(args.rhos and min(args.rhos) > 0, "--rhos", "penalties must be > 0")
        rhos = args.rhos
    else:
        _check(args.grid_size >= 1, "--grid-size", "must be >= 1")
        _check(args.ratio > 1, "--ratio", "must be > 1")
        rhos = default_rho_grid(s, args.grid_size, args.ratio)
    truth = _truth(args, data.p)
    points = glasso_path(s, rhos, MleConfig(lam=args.lam))
    rows, records = [], []
    for k, pt in enumerate(points):
        kl = None
        if truth is not None and pt.refit is not None:
            kl = kl_divergence(truth, pt.refit.model)
        edges = len(pt.graph) if pt.graph is not None else None
        ce = cross_entropy(s, pt.refit.model) if pt.refit is not None else None
        rows.append((k, pt.rho, edges, pt.converged, ce, kl, pt.error))
        records.append({"rho": pt.rho, "converged": pt.converged, "error": pt.error,
                        "edges": [list(e) for e in pt.graph.sorted_edges()] if pt.graph is not None else None})
    gio.atomic_write(os.path.join(args.out, "path.csv"),
                     gio.table_to_csv(("index", "rho", "edges", "converged", "ce_train", "kl", "error"), rows))
    gio.write_json(os.path.join(args.out, "path.json"), {"p": data.p, "lam": args.lam, "points": records})


def _report_dict(rep):
    d = dataclasses.asdict(rep)
    d["edge_counts"] = list(rep.edge_counts)
    return d


def cmd_select(args):
    trace, meta = _load(gio.read_trace, args.trace, "--trace")
    p = trace.graphs[0].p
    s_val, n_val = _validation_cov(args, trace)
    truth = _truth(args, p)
    _check(s_val is not None or truth is not None, "--validation", "give --validation, --data or --truth")
    lam = _lam(args, meta)
    _check(args.k > 0, "--k", "must be > 0")
    data = _load(gio.read_dataset, args.data, "--data") if args.data else None
    rep = build_report(trace, s_val, truth, data, n_val, lam, args.k, args.penalty)
    out = _report_dict(rep)
    out["n_val"] = n_val
    gio.write_json(os.path.join(args.out, "report.json"), out)
    gio.atomic_write(os.path.join(args.out, "candidates.csv"),
                     gio.table_to_csv(("index", "edges", "cvce", "tce", "ggmsc", "kl"), rep.rows()))
    log.info("selections: %s", rep.chosen)


def cmd_bench(args):
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    _check(set(methods) <= set(METHODS) and methods, "--methods", f"choose from {','.join(METHODS)}")
    _check(args.seeds and min(args.seeds) >= 0, "--seeds", "need at least one non-negative seed")
    _check(args.p >= 2, "--p", "must be >= 2")
    _check(args.n >= 4, "--n", "must be >= 4")
    _check(args.grid_size >= 1, "--grid-size", "must be >= 1")
    _check(args.steps is None or args.steps >= 0, "--steps", "must be >= 0")
    _check(args.penalty_multiplier > 0, "--penalty-multiplier", "must be > 0")
    _check(args.lam > 0, "--lam", "must be > 0")
    threads = _threads(args)
    spec = BenchSpec(args.p, args.n, args.connectivity, tuple(args.seeds), methods, args.grid_size, args.steps,
                     _fractions(args), InitConfig(penalty_multiplier=args.penalty_multiplier), MleConfig(lam=args.lam))
    points = run_bench(spec, threads)
    if not points:
        raise RuntimeError("every seed failed")
    rows = [tuple(getattr(pt, f) for f in FRONTIER_FIELDS) for pt in points]
    gio.atomic_write(os.path.join(args.out, "frontier.csv"), gio.table_to_csv(FRONTIER_FIELDS, rows))
    summary = summarize(points)
    keys = ("method", "count", "kl_mean", "kl_sd", "edges_mean", "edges_sd")
    gio.atomic_write(os.path.join(args.out, "summary.csv"),
                     gio.table_to_csv(keys, [tuple(r[k] for k in keys) for r in summary]))
    timing = sorted({(pt.method, pt.seed, pt.wall_time_ms) for pt in points})
    tkeys = ("method", "wall_ms_mean", "wall_ms_sd")
    gio.atomic_write(os.path.join(args.out, "timing.csv"), gio.table_to_csv(("method", "seed", "wall_time_ms"), timing))
    gio.atomic_write(os.path.join(args.out, "timing_summary.csv"),
                     gio.table_to_csv(tkeys, [tuple(r[k] for k in tkeys) for r in summary]))
    for r in summary:
        log.info("%s: KL %.4g +- %.3g, %.1f edges", r["method"], r["kl_mean"], r["kl_sd"], r["edges_mean"])


def cmd_bounds(args):
    trace, meta = _load(gio.read_trace, args.trace, "--trace")
    p = trace.graphs[0].p
    truth = _truth(args, p)
    s_val, n_val = _validation_cov(args, trace, flag_required=True)
    lam = _lam(args, meta)
    _check(args.deltas and min(args.deltas) >= 0, "--deltas", "must be >= 0")
    _check(args.draws >= 1, "--draws", "must be >= 1")
    _check(args.seed >= 0, "--seed", "must be >= 0")
    rb = regret_bounds(trace, s_val, n_val, truth, lam)
    pivot = max(abs(v) for v in pivot_residuals(trace, s_val, truth))
    conc = concentration_check(trace, truth, args.deltas, n_val, args.draws, args.seed)
    out = {"n_val": n_val, "lam": lam, "regret": dataclasses.asdict(rb), "pivot_max_residual": pivot,
           "concentration": [dataclasses.asdict(c) for c in conc],
           "note": "bound2_over_c sets the unknown constant c to 1; radius1 uses Sigma^{1/2} K Sigma^{1/2}"}
    gio.write_json(os.path.join(args.out, "bounds.json"), out)


COMMANDS = {
    "simulate": cmd_simulate, "fit": cmd_fit, "path": cmd_path,
    "select": cmd_select, "bench": cmd_bench, "bounds": cmd_bounds,
}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
