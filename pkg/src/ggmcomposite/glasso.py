"""l1-penalised likelihood baseline (graphical lasso) and its refit path.

The penalty acts on off-diagonal entries only. The solver works on
``S + lam I`` (ridge ``lam``, default 1e-6) so that low penalties on
rank-deficient covariances stay well posed; with that ridge the stationarity
conditions read ``sigma_ij - s_ij = rho * sign(kappa_ij)`` on the support and
``|sigma_ij - s_ij| <= rho`` elsewhere, with ``sigma_ii = s_ii + lam``.
"""

import logging
from dataclasses import dataclass

import numpy as np

from . import kernels
from .gauss import CovarianceMatrix, SpdPair, spd_inverse
from .graphs import Graph, graph_of_precision
from .mle import DEFAULT_LAMBDA, MleConfig, MleFit, constrained_mle

log = logging.getLogger(__name__)


TIGHTEN_ROUNDS = 6


@dataclass(frozen=True)
class GlassoConfig:
    rho: float
    tol: float = 1e-5
    max_iter: int = 200
    lam: float = DEFAULT_LAMBDA
    inner_tol: float = 1e-8
    inner_max_iter: int = 1000

    def __post_init__(self):
        if not self.rho >= 0:
            raise ValueError(f"rho must be >= 0, got {self.rho}")


@dataclass(frozen=True)
class GlassoResult:
    model: SpdPair
    graph: Graph
    iterations: int
    converged: bool


@dataclass(frozen=True)
class PathPoint:
    rho: float
    raw: SpdPair
    graph: Graph
    refit: MleFit
    converged: bool = True
    error: str = None


def _as_cov(s):
    return s if isinstance(s, CovarianceMatrix) else CovarianceMatrix(s)


class _WarmState:
    def __init__(self, S):
        self.W = S.copy()
        self.B = np.zeros_like(S)


def glasso_solve(s, cfg, _state=None):
    """Solve the penalised problem for one ``rho``; non-convergence is flagged.

    The kernel stops on the average change of the covariance over a sweep.
    The returned model is accepted only once its KKT violation is at most
    ``tol`` times the mean diagonal of ``S``; until then sweeping resumes from
    the current state with a tenfold tighter kernel tolerance, for at most
    ``TIGHTEN_ROUNDS`` rounds.
    """
    s = _as_cov(s)
    S = s.ridged(cfg.lam)
    state = _state if _state is not None else _WarmState(S)
    target = cfg.tol * max(float(np.mean(np.diag(S))), 1e-300)
    ktol, sweeps = cfg.tol, 0
    for _ in range(TIGHTEN_ROUNDS + 1):
        K, more, _ = kernels.glasso_bcd(
            S, float(cfg.rho), state.W, state.B, ktol, cfg.max_iter, cfg.inner_tol, cfg.inner_max_iter
        )
        sweeps += more
        graph = graph_of_precision(K)
        K = np.where(graph.adjacency() | np.eye(s.p, dtype=bool), K, 0.0)
        sigma = spd_inverse(K)
        model = SpdPair(0.5 * (sigma + sigma.T), K)
        resid = kkt_violation(s, model, cfg.rho, cfg.lam)
        if resid <= target:
            break
        ktol *= 0.1
    converged = bool(resid <= target)
    if not converged:
        log.warning("glasso did not converge at rho=%.4g (KKT violation %.3g)", cfg.rho, resid)
    return GlassoResult(model, graph, int(sweeps), converged)


def kkt_violation(s, model, rho, lam=DEFAULT_LAMBDA, zero=1e-8):
    """Largest breach of the stationarity conditions, 0 for an exact solution.

    Off the support the gap ``|sigma_ij - s_ij|`` may not exceed ``rho``; on
    the support it must equal ``rho * sign(kappa_ij)``; the diagonal must
    match ``s_ii + lam``.
    """
    s = _as_cov(s)
    gap = model.sigma - s.ridged(lam)
    K = model.kappa
    p = s.p
    off = ~np.eye(p, dtype=bool)
    on = off & (np.abs(K) > zero)
    viol = float(np.max(np.abs(np.diag(gap))))
    free = off & ~on
    if free.any():
        viol = max(viol, float(np.max(np.abs(gap[free]) - rho)))
    if on.any():
        viol = max(viol, float(np.max(np.abs(gap[on] - rho * np.sign(K[on])))))
    return max(viol, 0.0)


def default_rho_grid(s, size=20, ratio=100.0):
    """Log-spaced penalties from ``max |s_ij|`` down to that value / ``ratio``."""
    S = _as_cov(s).s
    top = float(np.max(np.abs(S[~np.eye(S.shape[0], dtype=bool)])))
    if top <= 0:
        top = 1.0
    return np.geomspace(top, top / ratio, size)


def glasso_path(s, rhos, mle_cfg=MleConfig(), glasso_tol=1e-5, glasso_max_iter=200):
    """Penalised solutions and their unpenalised refits, largest ``rho`` first.

    A failure at one penalty is recorded on its point (``error`` set, refit
    left as ``None``) and the path continues.
    """
    s = _as_cov(s)
    rhos = sorted((float(r) for r in rhos), reverse=True)
    if not rhos or min(rhos) <= 0:
        raise ValueError("rhos must be a nonempty list of positive penalties")
    state = _WarmState(s.ridged(mle_cfg.lam))
    points = []
    prev_fit = None
    for rho in rhos:
        cfg = GlassoConfig(rho=rho, tol=glasso_tol, max_iter=glasso_max_iter, lam=mle_cfg.lam)
        try:
            res = glasso_solve(s, cfg, state)
            warm = prev_fit if prev_fit is not None and prev_fit.graph.is_subgraph_of(res.graph) else None
            refit = constrained_mle(s, res.graph, mle_cfg, warm_start=warm)
            prev_fit = refit
            points.append(PathPoint(rho, res.model, res.graph, refit, res.converged))
        except (np.linalg.LinAlgError, ValueError) as exc:
            log.warning("glasso path point rho=%.4g failed: %s", rho, exc)
            state = _WarmState(s.ridged(mle_cfg.lam))
            points.append(PathPoint(rho, None, None, None, False, str(exc)))
    return points
