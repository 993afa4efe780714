"""Synthetic benchmark harness: seed sweeps over shared datasets.

For every seed one ground truth and one dataset are drawn, and every
requested method runs on exactly those rows. Path and trace methods emit one
:class:`FrontierPoint` per candidate; ``selected`` marks the candidate the
method itself would return (for ``glasso_path``, which has no data-driven
selection rule, it marks the oracle best point on the path).

Seed ``s`` uses the streams ``(s, TRUTH)`` for the model, ``(s, DATA)`` for
the rows and ``(s, HOLDOUT)`` for an independent holdout sample of the same
size; the composite split seed is ``s``.
"""

import hashlib
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .explore import InitConfig, SplitConfig, nodewise_init, run_composite
from .gauss import cross_entropy, empirical_covariance, kl_divergence, sample_gaussian
from .glasso import default_rho_grid, glasso_path
from .mle import MleConfig, constrained_mle, fit_sequence
from .select import select_cvce
from .seeding import DATA, HOLDOUT, TRUTH, derive_rng, derive_seed
from .simulate import CONNECTIVITY, GraphModelSpec, random_true_model

log = logging.getLogger(__name__)

METHODS = ("composite", "glasso_path", "nodewise_init")


@dataclass(frozen=True)
class BenchSpec:
    p: int
    n: int
    connectivity: str = "sparse"
    seeds: tuple = (0,)
    methods: tuple = METHODS
    rho_grid_size: int = 20
    steps: int = None
    split: SplitConfig = field(default_factory=SplitConfig)
    init: InitConfig = field(default_factory=InitConfig)
    mle: MleConfig = field(default_factory=MleConfig)
    hub: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "methods", tuple(self.methods))
        if not self.seeds:
            raise ValueError("seeds must be nonempty")
        if self.n < 4:
            raise ValueError(f"n must be >= 4 to split, got {self.n}")
        if self.p < 2:
            raise ValueError("p must be >= 2")
        if self.connectivity not in CONNECTIVITY:
            raise ValueError(f"unknown connectivity {self.connectivity!r}")
        bad = set(self.methods) - set(METHODS)
        if bad or not self.methods:
            raise ValueError(f"methods must be a nonempty subset of {METHODS}, got {self.methods}")
        if self.rho_grid_size < 1:
            raise ValueError("rho_grid_size must be >= 1")
        if self.steps is not None and self.steps < 0:
            raise ValueError("steps must be >= 0")


@dataclass(frozen=True)
class FrontierPoint:
    method: str
    seed: int
    index: int
    edge_count: int
    kl_truth: float
    ce_holdout: float
    wall_time_ms: float
    selected: bool
    data_hash: str

    def __post_init__(self):
        if not self.kl_truth >= -1e-9:
            raise ValueError(f"negative KL {self.kl_truth}")


FRONTIER_FIELDS = ("method", "seed", "index", "edge_count", "kl_truth", "ce_holdout", "selected", "data_hash")


def seed_instance(spec, seed):
    """Ground truth, dataset and holdout covariance for one seed."""
    model_spec = GraphModelSpec.preset(spec.p, spec.connectivity, hub=spec.hub, seed=derive_seed(seed, TRUTH))
    graph, truth = random_true_model(model_spec)
    data = sample_gaussian(truth, spec.n, derive_rng(seed, DATA))
    holdout = empirical_covariance(sample_gaussian(truth, spec.n, derive_rng(seed, HOLDOUT)))
    return graph, truth, data, holdout


def data_hash(data):
    return hashlib.sha256(np.ascontiguousarray(data.values).tobytes()).hexdigest()[:16]


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, 1000.0 * (time.perf_counter() - t0)


def run_seed(spec, seed):
    """All requested methods on the shared data of one seed."""
    _, truth, data, holdout = seed_instance(spec, seed)
    s = empirical_covariance(data)
    h = data_hash(data)
    points = []

    def emit(method, fits, ms, selected):
        for k, fit in enumerate(fits):
            points.append(FrontierPoint(
                method, seed, k, len(fit.graph), kl_divergence(truth, fit.model),
                cross_entropy(holdout, fit.model), ms, k == selected, h,
            ))

    for method in spec.methods:
        if method == "nodewise_init":
            fit, ms = _timed(lambda: constrained_mle(s, nodewise_init(data, spec.init), spec.mle))
            emit(method, [fit], ms, 0)
        elif method == "glasso_path":
            path, ms = _timed(lambda: glasso_path(s, default_rho_grid(s, spec.rho_grid_size), spec.mle))
            fits = [pt.refit for pt in path if pt.refit is not None]
            kls = [kl_divergence(truth, f.model) for f in fits]
            emit(method, fits, ms, int(np.argmin(kls)) if kls else -1)
        elif method == "composite":
            def solve():
                split = SplitConfig(spec.split.validation_fraction, spec.split.evaluation_fraction, seed)
                trace = run_composite(data, spec.init, split, spec.steps, spec.mle)
                chosen = select_cvce(trace, trace.validation_covariance(data))
                return trace, chosen
            (trace, chosen), ms = _timed(solve)
            # candidates are assessed as refits on all rows
            emit(method, fit_sequence(s, trace.graphs, spec.mle), ms, chosen)
    return points


def _safe_seed(spec, seed):
    try:
        return run_seed(spec, seed)
    except Exception as exc:  # a failing seed must not stop the sweep
        log.error("seed %d failed: %s", seed, exc)
        return []


def run_bench(spec, threads=1):
    """Frontier points for every seed, in seed order whatever ``threads`` is."""
    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            chunks = list(pool.map(lambda s: _safe_seed(spec, s), spec.seeds))
    else:
        chunks = [_safe_seed(spec, s) for s in spec.seeds]
    return [pt for chunk in chunks for pt in chunk]


def mean_sd(values):
    """Mean and population standard deviation (divide by ``len``)."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("no values")
    mean = float(np.mean(values))
    return mean, float(np.sqrt(np.mean((values - mean) ** 2)))


def summarize(points, selected_only=True):
    """Per-method mean and population sd of KL, edge count and wall time.

    With ``selected_only`` each seed contributes its selected candidate;
    otherwise every point counts. Wall time is counted once per seed.
    """
    if not points:
        raise ValueError("no points to summarize")
    rows = []
    for method in sorted({pt.method for pt in points}):
        pts = [pt for pt in points if pt.method == method and (pt.selected or not selected_only)]
        if not pts:
            continue
        kl = mean_sd([pt.kl_truth for pt in pts])
        edges = mean_sd([pt.edge_count for pt in pts])
        times = {}
        for pt in points:
            if pt.method == method:
                times[pt.seed] = pt.wall_time_ms
        wall = mean_sd(list(times.values()))
        rows.append({
            "method": method, "count": len(pts),
            "kl_mean": kl[0], "kl_sd": kl[1],
            "edges_mean": edges[0], "edges_sd": edges[1],
            "wall_ms_mean": wall[0], "wall_ms_sd": wall[1],
        })
    return rows
