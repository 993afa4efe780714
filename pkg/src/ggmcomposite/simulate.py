"""Random sparse ground-truth models for synthetic experiments."""

from dataclasses import dataclass

import numpy as np

from .gauss import SpdPair, sample_gaussian
from .graphs import Graph

DIAGONAL_MARGIN = 0.5

# Expected degree presets: edge probability = factor / p.
CONNECTIVITY = {"sparse": 1.5, "medium": 3.0, "dense": 6.0}


@dataclass(frozen=True)
class GraphModelSpec:
    p: int
    edge_prob: float
    hub: tuple = None  # (center, degree)
    off_diag_range: tuple = (0.2, 0.5)
    seed: int = 0

    def __post_init__(self):
        if self.p < 2:
            raise ValueError("p must be >= 2")
        if not 0.0 < self.edge_prob < 1.0:
            raise ValueError(f"edge probability must be in (0, 1), got {self.edge_prob}")
        low, high = self.off_diag_range
        if not 0.0 < low <= high:
            raise ValueError(f"need 0 < low <= high, got {self.off_diag_range}")
        if self.hub is not None:
            center, degree = self.hub
            if not 0 <= center < self.p or not 0 <= degree <= self.p - 1:
                raise ValueError(f"invalid hub {self.hub} for p={self.p}")

    @classmethod
    def preset(cls, p, connectivity="sparse", **kwargs):
        """Spec whose edge probability is ``factor / p`` for a named preset."""
        try:
            factor = CONNECTIVITY[connectivity]
        except KeyError:
            raise ValueError(
                f"unknown connectivity {connectivity!r}; choose from {sorted(CONNECTIVITY)}"
            ) from None
        return cls(p=p, edge_prob=min(factor / p, 0.99), **kwargs)


def random_true_model(spec):
    """Draw a graph and a diagonally dominant precision supported on it.

    Off-diagonal entries are uniform in ``+-[low, high]`` with a random sign;
    each diagonal entry is the row's absolute off-diagonal sum plus 0.5. When
    a hub ``(center, degree)`` is requested, the center is joined to
    ``degree`` random vertices and kept out of the background edges so its
    degree is exactly ``degree``.
    """
    rng = np.random.default_rng(spec.seed)
    p = spec.p
    draws = rng.random((p, p))
    adj = np.triu(draws < spec.edge_prob, k=1)
    if spec.hub is not None:
        center, degree = spec.hub
        adj[center, :] = False
        adj[:, center] = False
        others = np.array([v for v in range(p) if v != center])
        for v in rng.choice(others, size=degree, replace=False):
            i, j = min(center, v), max(center, v)
            adj[i, j] = True
    low, high = spec.off_diag_range
    mags = rng.uniform(low, high, size=(p, p))
    signs = rng.choice([-1.0, 1.0], size=(p, p))
    upper = np.where(adj, mags * signs, 0.0)
    kappa = upper + upper.T
    np.fill_diagonal(kappa, np.abs(kappa).sum(axis=1) + DIAGONAL_MARGIN)
    graph = Graph.from_adjacency(adj)
    return graph, SpdPair.from_kappa(kappa)


def make_experiment(spec, n, seed):
    """Ground truth from ``spec`` plus ``n`` samples drawn with ``seed``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    graph, model = random_true_model(spec)
    return graph, model, sample_gaussian(model, n, seed)
