"""Undirected graphs on ``p`` vertices, support projections and recovery metrics."""

from dataclasses import dataclass

import numpy as np

ZERO_THRESHOLD = 1e-8


def _edge(i, j):
    i, j = int(i), int(j)
    if i == j:
        raise ValueError(f"self-loop ({i}, {i}) is not allowed")
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph; edges are stored as sorted pairs ``i < j``."""

    p: int
    edges: frozenset = frozenset()

    def __post_init__(self):
        edges = frozenset(_edge(i, j) for i, j in self.edges)
        for i, j in edges:
            if not (0 <= i < self.p and 0 <= j < self.p):
                raise ValueError(f"edge ({i}, {j}) out of range for p={self.p}")
        object.__setattr__(self, "edges", edges)

    @classmethod
    def empty(cls, p):
        return cls(p)

    @classmethod
    def complete(cls, p):
        return cls(p, frozenset((i, j) for i in range(p) for j in range(i + 1, p)))

    @classmethod
    def from_adjacency(cls, adj):
        adj = np.asarray(adj, dtype=bool)
        iu, ju = np.nonzero(np.triu(adj | adj.T, k=1))
        return cls(adj.shape[0], frozenset(zip(iu.tolist(), ju.tolist())))

    def __len__(self):
        return len(self.edges)

    def __contains__(self, edge):
        return _edge(*edge) in self.edges

    def sorted_edges(self):
        return sorted(self.edges)

    def adjacency(self):
        adj = np.zeros((self.p, self.p), dtype=bool)
        for i, j in self.edges:
            adj[i, j] = adj[j, i] = True
        return adj

    def neighbors(self, a):
        return sorted({j for i, j in self.edges if i == a} | {i for i, j in self.edges if j == a})

    def degrees(self):
        deg = np.zeros(self.p, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def add(self, edge):
        return Graph(self.p, self.edges | {_edge(*edge)})

    def remove(self, edge):
        return Graph(self.p, self.edges - {_edge(*edge)})

    def is_subgraph_of(self, other):
        return self.p == other.p and self.edges <= other.edges

    def is_complete(self):
        return len(self.edges) == self.p * (self.p - 1) // 2

    def to_edge_list(self):
        """One ``"i j"`` line per edge, 0-indexed, sorted."""
        return "".join(f"{i} {j}\n" for i, j in self.sorted_edges())

    @classmethod
    def from_edge_list(cls, text, p):
        edges = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"edge list line {lineno}: expected 'i j', got {line!r}")
            edges.append((int(parts[0]), int(parts[1])))
        return cls(p, frozenset(edges))


@dataclass(frozen=True)
class GraphMetrics:
    true_positive: int
    false_positive: int
    false_negative: int
    precision: float
    recall: float
    hamming: int


def graph_of_precision(kappa, threshold=ZERO_THRESHOLD):
    """Edges ``(i, j)``, ``i < j``, where ``|kappa_ij| > threshold``."""
    kappa = np.asarray(kappa, dtype=float)
    if kappa.ndim != 2 or kappa.shape[0] != kappa.shape[1]:
        raise ValueError("precision must be square")
    mask = np.abs(kappa) > threshold
    return Graph.from_adjacency(np.triu(mask, k=1))


def support_mask(g):
    """Boolean mask of the edge set plus the diagonal."""
    mask = g.adjacency()
    np.fill_diagonal(mask, True)
    return mask


def project_onto_graph(m, g):
    """Keep the diagonal and the entries on the edges of ``g``; zero the rest."""
    m = np.asarray(m, dtype=float)
    if m.shape != (g.p, g.p):
        raise ValueError(f"matrix shape {m.shape} does not match graph with p={g.p}")
    return np.where(support_mask(g), m, 0.0)


def compare_graphs(estimate, truth):
    if estimate.p != truth.p:
        raise ValueError(f"vertex count mismatch: {estimate.p} vs {truth.p}")
    tp = len(estimate.edges & truth.edges)
    fp = len(estimate.edges - truth.edges)
    fn = len(truth.edges - estimate.edges)
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    return GraphMetrics(tp, fp, fn, precision, recall, fp + fn)


def path_through(waypoints, rng):
    """Edge-by-edge graph sequence visiting each waypoint graph in turn.

    Starts at the first waypoint. Between consecutive waypoints the missing
    edges are added one at a time (random order), then the surplus edges are
    removed one at a time (random order). Every waypoint appears in the
    returned list; the index of each is also returned.
    """
    graphs = [waypoints[0]]
    marks = [0]
    current = waypoints[0]
    for target in waypoints[1:]:
        if target.p != current.p:
            raise ValueError("waypoints must share p")
        missing = sorted(target.edges - current.edges)
        surplus = sorted(current.edges - target.edges)
        for k in rng.permutation(len(missing)):
            current = current.add(missing[k])
            graphs.append(current)
        for k in rng.permutation(len(surplus)):
            current = current.remove(surplus[k])
            graphs.append(current)
        marks.append(len(graphs) - 1)
    return graphs, marks
