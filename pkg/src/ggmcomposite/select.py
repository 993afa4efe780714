"""Model selection over a trace and the oracle regret bounds.

``select_cvce`` picks the trace entry with the smallest cross-entropy against
a validation covariance, ``select_oracle`` the one closest to the truth.
``ggmsc_score`` is the degree-penalised nodewise residual criterion used by
GGMselect, kept as a comparison scorer. ``regret_bounds`` and
``concentration_radii`` evaluate the explicit controls on how much worse the
validation choice can be than the oracle choice.
"""

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special, stats

from .gauss import CovarianceMatrix, Dataset, cross_entropy
from .graphs import Graph, graph_of_precision, support_mask
from .seeding import VALIDATION_DRAWS, derive_rng

DEFAULT_K = 2.5


def _models(trace):
    """Accept an ExplorationTrace, a list of MleFit or a list of SpdPair."""
    fits = getattr(trace, "fits", trace)
    models = [getattr(f, "model", f) for f in fits]
    if not models:
        raise ValueError("empty trace")
    return models


def _graphs(trace):
    if hasattr(trace, "graphs"):
        return list(trace.graphs)
    out = []
    for f in getattr(trace, "fits", trace):
        g = getattr(f, "graph", None)
        out.append(g if g is not None else graph_of_precision(f.kappa))
    return out


def argmin_first(scores):
    """Index of the smallest score; ties go to the smallest index. NaN never wins."""
    scores = np.asarray(scores, dtype=float)
    if scores.size == 0:
        raise ValueError("empty score list")
    best = 0
    for k in range(1, scores.size):
        if scores[k] < scores[best] or (np.isnan(scores[best]) and not np.isnan(scores[k])):
            best = k
    return best


def cvce_scores(trace, s_val):
    return [cross_entropy(s_val, m) for m in _models(trace)]


def tce_scores(trace, truth):
    return [cross_entropy(truth, m) for m in _models(trace)]


def select_cvce(trace, s_val):
    """Index of the entry minimising ``H(S_val, fit)``."""
    return argmin_first(cvce_scores(trace, s_val))


def select_oracle(trace, truth):
    """Index of the entry minimising ``H(Sigma, fit)``; needs the true model."""
    return argmin_first(tce_scores(trace, truth))


# ---------------------------------------------------------------------------
# GGMselect criterion
# ---------------------------------------------------------------------------


def dkhi(D, N, x):
    """``Dkhi(D, N, x)``, decreasing in ``x`` from 1 to 0."""
    if x <= 0:
        return 1.0
    a = stats.f.sf(x / (D + 2), D + 2, N)
    b = stats.f.sf((N + 2) * x / (N * D), D, N + 2)
    return float(a - x / D * b)


def edkhi(D, N, q):
    """Inverse of :func:`dkhi` in ``x``: the ``x`` with ``Dkhi(D, N, x) = q``."""
    if not 0 < q <= 1:
        raise ValueError(f"q must lie in (0, 1], got {q}")
    if q == 1:
        return 0.0
    hi = max(1.0, float(D))
    while dkhi(D, N, hi) > q:
        hi *= 2.0
        if hi > 1e12:
            raise ArithmeticError(f"EDkhi bracket failed for D={D}, N={N}, q={q}")
    return optimize.brentq(lambda x: dkhi(D, N, x) - q, 0.0, hi, xtol=1e-12, rtol=1e-12)


@functools.lru_cache(maxsize=4096)
def ggm_penalty(d, n, p, k_param=DEFAULT_K):
    """Exact GGMselect penalty ``pen(d)``, infinite once ``d >= n - 1``."""
    N = n - d - 1
    if N <= 0:
        return math.inf
    q = 1.0 / (special.comb(p - 1, d, exact=False) * (d + 1) ** 2)
    return k_param * (n - d) / N * edkhi(d + 1, N, q)


def simple_penalty(d, n, p, k_param=DEFAULT_K):
    """Closed-form fallback ``k d (1 + log(p / max(d, 1)))``."""
    if d >= n - 1:
        return math.inf
    return k_param * d * (1.0 + math.log(p / max(d, 1)))


PENALTIES = {"exact": ggm_penalty, "simple": simple_penalty}


def nodewise_ols(x, graph):
    """Residuals of every column regressed (OLS) on its graph neighbours."""
    resid = np.empty_like(x)
    for a in range(graph.p):
        nb = sorted(graph.neighbors(a))
        if not nb:
            resid[:, a] = x[:, a]
            continue
        coef, *_ = np.linalg.lstsq(x[:, nb], x[:, a], rcond=None)
        resid[:, a] = x[:, a] - x[:, nb] @ coef
    return resid


def ggmsc_score(graph, data, k_param=DEFAULT_K, penalty="exact"):
    """``sum_a |X_a - X theta_a|^2 (1 + pen(d_a) / (n - d_a))`` on centred data.

    Returns ``inf`` when some degree is ``>= n - 1`` (the model cannot be
    fitted); lower is better.
    """
    x = data.values if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    n, p = x.shape
    if graph.p != p:
        raise ValueError(f"dimension mismatch: data p={p}, graph p={graph.p}")
    pen = PENALTIES[penalty]
    degrees = graph.degrees()
    if max(degrees, default=0) >= n - 1:
        return math.inf
    x = x - x.mean(axis=0)
    rss = np.sum(nodewise_ols(x, graph) ** 2, axis=0)
    cache = {}
    total = 0.0
    for a in range(p):
        d = int(degrees[a])
        if d not in cache:
            cache[d] = pen(d, n, p, k_param)
        total += rss[a] * (1.0 + cache[d] / (n - d))
    return float(total)


def select_ggmsc(graphs, data, k_param=DEFAULT_K, penalty="exact"):
    return argmin_first([ggmsc_score(g, data, k_param, penalty) for g in graphs])


# ---------------------------------------------------------------------------
# Regret bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegretBounds:
    sigma_inf: float
    d_max: int
    bound1: float
    bound2_over_c: float
    regret: float
    cvce_index: int
    oracle_index: int


def union_edges(graphs):
    edges = set()
    for g in graphs:
        edges |= g.edges
    return frozenset(edges)


def bound1(sigma_inf, p, d_max, n_val, lam):
    return sigma_inf / (lam * math.sqrt(2.0)) * math.sqrt(p + 2 * d_max) * p / math.sqrt(n_val)


def bound2_over_c(lambda_max, p, n_val, lam):
    return lambda_max / lam * p * max(math.sqrt(p / n_val), p / n_val)


def regret_bounds(trace, s_val, n_val, truth, lam):
    """Empirical regret of the validation choice and its two explicit bounds.

    ``bound2_over_c`` is the concentration bound with its unknown absolute
    constant set to 1.
    """
    s_val = s_val if isinstance(s_val, CovarianceMatrix) else CovarianceMatrix(s_val)
    models = _models(trace)
    graphs = _graphs(trace)
    p = truth.p
    sigma_inf = float(np.max(np.abs(truth.sigma)))
    d_max = len(union_edges(graphs))
    cv = select_cvce(models, s_val)
    tce = tce_scores(models, truth)
    orc = argmin_first(tce)
    lam_max = float(np.linalg.eigvalsh(truth.sigma)[-1])
    return RegretBounds(
        sigma_inf, d_max, bound1(sigma_inf, p, d_max, n_val, lam),
        bound2_over_c(lam_max, p, n_val, lam), tce[cv] - tce[orc], cv, orc,
    )


def pivot_residuals(trace, s_val, truth):
    """``H(Sigma, fit) - H(S_val, fit) - <Sigma - S_val, K> / 2`` per entry (zero up to rounding)."""
    s = s_val.s if isinstance(s_val, CovarianceMatrix) else np.asarray(s_val)
    out = []
    for m in _models(trace):
        lhs = cross_entropy(truth, m) - cross_entropy(s, m)
        rhs = 0.5 * float(np.sum((truth.sigma - s) * m.kappa))
        out.append(lhs - rhs)
    return out


def _sym_power(a, power):
    w, v = np.linalg.eigh(a)
    return (v * w**power) @ v.T


@dataclass(frozen=True)
class ConcentrationReport:
    delta: float
    radius1: float
    radius1_inverse: float
    radius2: float
    freq_regret: float = None
    freq_event1: float = None
    freq_event1_inverse: float = None
    freq_event2: float = None
    draws: int = 0


def concentration_radii(trace, truth, delta):
    """``(radius1, radius1_inverse, radius2)`` for a fixed trace.

    ``radius1 = delta / max |Sigma^{1/2} K Sigma^{1/2}|_F`` is the radius on
    ``|W - I|_F`` with ``S_val = Sigma^{1/2} W Sigma^{1/2}``. The variant with
    ``Sigma^{-1/2}`` conjugation is returned as ``radius1_inverse`` for
    comparison; it does not give a valid implication in general.
    ``radius2 = delta / max |K|_F`` is the radius on the projected deviation.
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    models = _models(trace)
    half = _sym_power(truth.sigma, 0.5)
    ihalf = _sym_power(truth.sigma, -0.5)
    m1 = max(np.linalg.norm(half @ m.kappa @ half) for m in models)
    m1i = max(np.linalg.norm(ihalf @ m.kappa @ ihalf) for m in models)
    m2 = max(np.linalg.norm(m.kappa) for m in models)
    return float(delta / m1), float(delta / m1i), float(delta / m2)


def concentration_check(trace, truth, deltas, n_val, draws=10_000, seed=0):
    """Monte-Carlo frequencies of a small regret and of the two sufficient events.

    Validation covariances are drawn as ``S_val = Sigma^{1/2} W Sigma^{1/2}``
    with ``n_val W`` standard Wishart (uncentred, so ``E S_val = Sigma``),
    from the stream ``(seed, VALIDATION_DRAWS)``. Returns one
    :class:`ConcentrationReport` per delta.
    """
    models = _models(trace)
    graphs = _graphs(trace)
    p = truth.p
    half = _sym_power(truth.sigma, 0.5)
    mask = support_mask(Graph(p, union_edges(graphs)))
    tce = np.array(tce_scores(models, truth))
    best = tce.min()
    kappas = np.stack([m.kappa for m in models])
    logdets = np.array([np.linalg.slogdet(k)[1] for k in kappas])
    rng = derive_rng(seed, VALIDATION_DRAWS)
    regret = np.empty(draws)
    dev_w = np.empty(draws)
    dev_proj = np.empty(draws)
    eye = np.eye(p)
    for r in range(draws):
        z = rng.standard_normal((n_val, p))
        w = z.T @ z / n_val
        s = half @ w @ half
        ce = 0.5 * (np.einsum("ij,kij->k", s, kappas) - logdets)
        regret[r] = tce[argmin_first(ce)] - best
        dev_w[r] = np.linalg.norm(w - eye)
        dev_proj[r] = np.linalg.norm(np.where(mask, s - truth.sigma, 0.0))
    out = []
    for delta in deltas:
        r1, r1i, r2 = concentration_radii(models, truth, delta)
        out.append(ConcentrationReport(
            float(delta), r1, r1i, r2,
            float(np.mean(regret <= delta)), float(np.mean(dev_w <= r1)),
            float(np.mean(dev_w <= r1i)), float(np.mean(dev_proj <= r2)), draws,
        ))
    return out


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------


@dataclass
class SelectionReport:
    """Per-candidate scores and the index chosen by each available criterion."""

    edge_counts: list
    cvce: list = None
    tce: list = None
    kl: list = None
    ggmsc: list = None
    penalty: str = None
    chosen: dict = field(default_factory=dict)
    regret: RegretBounds = None

    def rows(self):
        """Per-candidate table rows ``(index, edges, cvce, tce, ggmsc, kl)``."""
        n = len(self.edge_counts)
        col = lambda v: v if v is not None else [None] * n
        return list(zip(range(n), self.edge_counts, col(self.cvce), col(self.tce), col(self.ggmsc), col(self.kl)))


def build_report(trace, s_val, truth=None, data=None, n_val=None, lam=None, k_param=DEFAULT_K,
                 penalty="exact"):
    """Score every trace entry and collect the selections.

    ``s_val`` (may be ``None``) enables the CVCE column, ``truth`` the
    oracle column and, with ``s_val``, ``n_val`` and ``lam``, the regret
    diagnostics. ``data`` (the rows GGMSC should see) enables the GGMSC
    column.
    """
    models = _models(trace)
    graphs = _graphs(trace)
    rep = SelectionReport([len(g) for g in graphs])
    if s_val is not None:
        s_val = s_val if isinstance(s_val, CovarianceMatrix) else CovarianceMatrix(s_val)
        rep.cvce = cvce_scores(models, s_val)
        rep.chosen["cvce"] = argmin_first(rep.cvce)
    if truth is not None:
        rep.tce = tce_scores(models, truth)
        base = cross_entropy(truth, truth)
        rep.kl = [t - base for t in rep.tce]
        rep.chosen["oracle"] = argmin_first(rep.tce)
        if s_val is not None and n_val is not None and lam is not None:
            rep.regret = regret_bounds(trace, s_val, n_val, truth, lam)
    if data is not None:
        rep.ggmsc = [ggmsc_score(g, data, k_param, penalty) for g in graphs]
        rep.penalty = penalty
        rep.chosen["ggmsc"] = argmin_first(rep.ggmsc)
    return rep
