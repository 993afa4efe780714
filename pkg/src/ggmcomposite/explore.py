"""Composite graph exploration.

Starting from a sparse initial graph, each step asks every vertex for the
non-neighbour that best explains what its current neighbours leave
unexplained (first entrant of a LARS path on the residual). Mutual proposals
take priority; each remaining candidate edge is scored by the cross-entropy
of its learning-set MLE against a held-out evaluation covariance, and the
best one is added. The result is a nested family of graphs with one more
edge per step, each refitted on the whole exploration set.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .gauss import Dataset, cross_entropy, empirical_covariance, standardize
from .graphs import Graph
from .mle import MleConfig, constrained_mle
from .seeding import STEP_SPLIT, TRAIN_SPLIT, derive_rng

log = logging.getLogger(__name__)

PINV_RCOND = 1e-10
DEFAULT_PENALTY_MULTIPLIER = 1.5


class ZeroVarianceTargetError(ValueError):
    pass


@dataclass(frozen=True)
class SplitConfig:
    validation_fraction: float = 0.3
    evaluation_fraction: float = 0.3
    seed: int = 0

    def __post_init__(self):
        for name in ("validation_fraction", "evaluation_fraction"):
            value = getattr(self, name)
            if not 0.05 < value < 0.5:
                raise ValueError(f"{name} must lie in (0.05, 0.5), got {value}")


@dataclass(frozen=True)
class InitConfig:
    method: str = "nodewise"
    penalty_multiplier: float = DEFAULT_PENALTY_MULTIPLIER
    path: str = None

    def __post_init__(self):
        if self.method not in ("nodewise", "file", "empty"):
            raise ValueError(f"unknown init method {self.method!r}")
        if not self.penalty_multiplier > 0:
            raise ValueError("penalty_multiplier must be > 0")
        if self.method == "file" and not self.path:
            raise ValueError("init method 'file' needs a path")


@dataclass
class ExplorationTrace:
    """Nested graphs ``G_0 ... G_T`` with their exploration-set fits.

    ``step_logs[t-1]`` documents how ``G_t`` was chosen. Row indices of the
    validation and exploration parts of the data are kept so the validation
    covariance can be rebuilt.
    """

    graphs: list
    fits: list
    step_logs: list = field(default_factory=list)
    validation_rows: np.ndarray = None
    exploration_rows: np.ndarray = None

    def __len__(self):
        return len(self.graphs)

    def validation_covariance(self, data):
        return empirical_covariance(data.values[self.validation_rows])

    def exploration_covariance(self, data):
        return empirical_covariance(data.values[self.exploration_rows])


def _values(data):
    return data.values if isinstance(data, Dataset) else np.asarray(data, dtype=float)


# ---------------------------------------------------------------------------
# Initial graph
# ---------------------------------------------------------------------------


def nodewise_lasso_coefficients(data, penalty_multiplier=DEFAULT_PENALTY_MULTIPLIER):
    """``p x p`` matrix whose column ``a`` holds the lasso fit of ``X_a`` on the rest.

    Predictors are standardised; the penalty for node ``a`` is
    ``penalty_multiplier * sd(X_a) * sqrt(2 log p / n)`` on the objective
    ``(1/2n)|X_a - Z b|^2 + rho |b|_1``.
    """
    x = _values(data)
    n, p = x.shape
    z = standardize(x)
    xc = x - x.mean(axis=0)
    sd = np.sqrt(np.mean(xc**2, axis=0))
    gram = z.T @ z / n
    coefs = np.zeros((p, p))
    base = np.sqrt(2.0 * np.log(p) / n)
    for a in range(p):
        others = np.r_[0:a, a + 1:p]
        Q = np.ascontiguousarray(gram[np.ix_(others, others)])
        c = z[:, others].T @ xc[:, a] / n
        beta = np.zeros(p - 1)
        kernels.lasso_cd(Q, c, penalty_multiplier * sd[a] * base, beta, 1e-10, 10000)
        coefs[others, a] = beta
    return coefs


def nodewise_init(data, cfg=InitConfig()):
    """Initial graph from nodewise lasso regressions combined with the AND rule."""
    x = _values(data)
    p = x.shape[1]
    if cfg.method == "empty":
        return Graph.empty(p)
    if cfg.method == "file":
        with open(cfg.path) as fh:
            return Graph.from_edge_list(fh.read(), p)
    nz = nodewise_lasso_coefficients(x, cfg.penalty_multiplier) != 0
    return Graph.from_adjacency(np.triu(nz & nz.T, k=1))


# ---------------------------------------------------------------------------
# Step machinery
# ---------------------------------------------------------------------------


def residualize(data, target, neighbors):
    """Least-squares residual of centred column ``target`` on columns ``neighbors``.

    Rank-deficient neighbour blocks get the minimum-norm solution (singular
    values below ``1e-10`` times the largest are discarded).
    """
    x = _values(data)
    neighbors = list(neighbors)
    if target in neighbors:
        raise ValueError(f"target {target} listed among its own neighbours")
    xc = x - x.mean(axis=0)
    y = xc[:, target]
    if not neighbors:
        return y.copy()
    A = xc[:, neighbors]
    coef, *_ = np.linalg.lstsq(A, y, rcond=PINV_RCOND)
    return y - A @ coef


def lars_first_choice(target, candidates, labels=None):
    """First variable to enter a LARS path: the column most correlated with ``target``.

    ``candidates`` is an ``n x k`` array (or Dataset); ``labels`` maps its
    columns to vertex ids (defaults to ``0..k-1``). Ties go to the smallest
    label.
    """
    y = np.asarray(target, dtype=float)
    y = y - y.mean()
    ynorm = np.linalg.norm(y)
    x = _values(candidates)
    if x.shape[1] == 0:
        raise ValueError("no candidate columns")
    if ynorm <= 1e-12 * max(1.0, np.sqrt(len(y))) or not np.isfinite(ynorm):
        raise ZeroVarianceTargetError("target has zero variance; no meaningful choice")
    xc = x - x.mean(axis=0)
    norms = np.linalg.norm(xc, axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.abs(xc.T @ y) / (norms * ynorm)
    corr[norms <= 1e-12] = -1.0
    labels = list(range(x.shape[1])) if labels is None else list(labels)
    order = np.argsort(labels, kind="stable")
    best = None
    for k in order:
        if best is None or corr[k] > corr[best]:
            best = k
    return labels[best]


def propose_edges(learn, graph):
    """Each vertex's preferred new neighbour on the learning data.

    Returns ``{a: c(a)}``; vertices with a full neighbourhood or whose
    residual vanishes make no proposal.
    """
    x = _values(learn)
    p = x.shape[1]
    proposals = {}
    for a in range(p):
        nbrs = graph.neighbors(a)
        free = [v for v in range(p) if v != a and v not in nbrs]
        if not free:
            continue
        resid = residualize(x, a, nbrs)
        try:
            proposals[a] = lars_first_choice(resid, x[:, free], free)
        except ZeroVarianceTargetError:
            log.debug("vertex %d: residual vanished, no proposal", a)
    return proposals


def candidate_edges(proposals):
    """Mutual selections if any exist, otherwise every proposal; deduplicated and sorted."""
    mutual = sorted({tuple(sorted((a, c))) for a, c in proposals.items() if proposals.get(c) == a})
    if mutual:
        return mutual, True
    return sorted({tuple(sorted((a, c))) for a, c in proposals.items()}), False


@dataclass(frozen=True)
class StepResult:
    edge: tuple
    graph: Graph
    log: dict


def explore_step(graph, learn, s_eval, mle_cfg=MleConfig(), pool=None):
    """Add one edge to ``graph``; ``None`` when no vertex makes a proposal.

    ``learn`` holds the learning rows, ``s_eval`` the evaluation covariance.
    Candidate MLEs are fitted on the learning covariance, warm started from
    the fit of ``graph`` itself, and the edge with the lowest evaluation
    cross-entropy wins (ties: lexicographically smallest).
    """
    if graph.is_complete():
        return None
    proposals = propose_edges(learn, graph)
    candidates, mutual = candidate_edges(proposals)
    if not candidates:
        return None
    s_learn = empirical_covariance(_values(learn))
    base = constrained_mle(s_learn, graph, mle_cfg)

    def score(edge):
        fit = constrained_mle(s_learn, graph.add(edge), mle_cfg, warm_start=base)
        return cross_entropy(s_eval, fit.model)

    scores = list(pool.map(score, candidates)) if pool is not None else [score(e) for e in candidates]
    best = 0
    for k in range(1, len(scores)):
        if scores[k] < scores[best]:
            best = k
    edge = candidates[best]
    entry = {
        "proposals": {int(a): int(c) for a, c in sorted(proposals.items())},
        "mutual": mutual,
        "candidates": [list(map(int, e)) for e in candidates],
        "scores": [float(v) for v in scores],
        "chosen": list(map(int, edge)),
    }
    return StepResult(edge, graph.add(edge), entry)


def split_sizes(n, fraction):
    k = int(round(fraction * n))
    k = min(max(k, 2), n - 2)
    if k < 2 or n - k < 2:
        raise ValueError(f"cannot split {n} rows with fraction {fraction} into parts of >= 2")
    return k


def default_steps(p, init_edges):
    return max(0, min(3 * p, p * (p - 1) // 2 - init_edges))


def run_composite(data, init=InitConfig(), split=SplitConfig(), steps=None, mle_cfg=MleConfig(),
                  threads=1, initial_graph=None):
    """Run the exploration loop and return the trace.

    The initial graph is computed on the whole data (or taken from
    ``initial_graph``); the data are then split into validation and
    exploration rows, and every step re-draws a learning/evaluation partition
    of the exploration rows from the stream ``(split.seed, STEP_SPLIT, t)``.
    """
    x = _values(data)
    n, p = x.shape
    g0 = initial_graph if initial_graph is not None else nodewise_init(x, init)
    if steps is None:
        steps = default_steps(p, len(g0))
    if steps < 0:
        raise ValueError("steps must be >= 0")

    n_val = split_sizes(n, split.validation_fraction)
    perm = derive_rng(split.seed, TRAIN_SPLIT).permutation(n)
    val_rows = np.sort(perm[:n_val])
    expl_rows = np.sort(perm[n_val:])
    expl = x[expl_rows]
    n_expl = len(expl_rows)
    n_eval = split_sizes(n_expl, split.evaluation_fraction)
    s_expl = empirical_covariance(expl)

    fits = [constrained_mle(s_expl, g0, mle_cfg)]
    graphs = [g0]
    logs = []
    pool = ThreadPoolExecutor(threads) if threads and threads > 1 else None
    try:
        for t in range(1, steps + 1):
            order = derive_rng(split.seed, STEP_SPLIT, t).permutation(n_expl)
            eval_rows, learn_rows = order[:n_eval], order[n_eval:]
            s_eval = empirical_covariance(expl[eval_rows])
            res = explore_step(graphs[-1], expl[learn_rows], s_eval, mle_cfg, pool)
            if res is None:
                log.info("exploration stopped early at step %d: no candidate edge", t)
                break
            res.log["step"] = t
            res.log["evaluation_rows"] = expl_rows[np.sort(eval_rows)].tolist()
            graphs.append(res.graph)
            fits.append(constrained_mle(s_expl, res.graph, mle_cfg, warm_start=fits[-1]))
            logs.append(res.log)
    finally:
        if pool is not None:
            pool.shutdown()
    return ExplorationTrace(graphs, fits, logs, val_rows, expl_rows)
