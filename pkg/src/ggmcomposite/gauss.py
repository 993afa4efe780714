"""Centred multivariate Gaussian primitives.

Cross-entropies drop the additive constant ``p/2 * log(2 pi)``, so they are
only comparable between models of the same dimension.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg


class NotPositiveDefiniteError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    """``n x p`` observations with column labels."""

    values: np.ndarray
    column_names: tuple = field(default=None)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError("dataset values must be a 2-d array")
        if not np.all(np.isfinite(values)):
            raise ValueError("dataset contains non-finite entries")
        n, p = values.shape
        if n < 2 or p < 2:
            raise ValueError(f"dataset needs n >= 2 and p >= 2, got {n}x{p}")
        names = self.column_names
        if names is None:
            names = tuple(f"x{j}" for j in range(p))
        names = tuple(str(c) for c in names)
        if len(names) != p:
            raise ValueError(f"{len(names)} column names for {p} columns")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]

    def subset(self, rows):
        return Dataset(self.values[np.asarray(rows)], self.column_names)


@dataclass(frozen=True)
class CovarianceMatrix:
    """Symmetric PSD matrix and the number of rows it came from (0 = exact)."""

    s: np.ndarray
    n_source: int = 0

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise ValueError("covariance must be square")
        if not np.all(np.isfinite(s)):
            raise ValueError("covariance contains non-finite entries")
        object.__setattr__(self, "s", s)

    @property
    def p(self):
        return self.s.shape[0]

    def ridged(self, lam):
        return self.s + lam * np.eye(self.p)


@dataclass(frozen=True)
class SpdPair:
    """A covariance ``sigma`` together with its inverse ``kappa``."""

    sigma: np.ndarray
    kappa: np.ndarray

    @classmethod
    def from_sigma(cls, sigma):
        sigma = _symmetrize(sigma)
        return cls(sigma, _symmetrize(spd_inverse(sigma)))

    @classmethod
    def from_kappa(cls, kappa):
        kappa = _symmetrize(kappa)
        return cls(_symmetrize(spd_inverse(kappa)), kappa)

    @property
    def p(self):
        return self.sigma.shape[0]

    def check(self, tol=1e-8):
        """Raise if the pair violates symmetry, inversion or definiteness."""
        for name, m in (("sigma", self.sigma), ("kappa", self.kappa)):
            if np.max(np.abs(m - m.T)) > 1e-10 * max(1.0, np.max(np.abs(m))):
                raise ValueError(f"{name} is not symmetric")
        resid = np.max(np.abs(self.sigma @ self.kappa - np.eye(self.p)))
        if resid > tol:
            raise ValueError(f"sigma @ kappa deviates from identity by {resid:.3g}")
        if np.linalg.eigvalsh(self.sigma)[0] <= 0:
            raise NotPositiveDefiniteError("sigma is not positive definite")


def _symmetrize(m):
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + m.T)


def cholesky(m):
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("matrix is not positive definite") from exc


def logdet(m):
    """Log-determinant of an SPD matrix from its Cholesky factor."""
    L = cholesky(m)
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def spd_inverse(m):
    L = cholesky(m)
    Linv = scipy.linalg.solve_triangular(L, np.eye(L.shape[0]), lower=True)
    return Linv.T @ Linv


def empirical_covariance(data):
    """Biased (1/n) covariance of column-centred data."""
    x = data.values if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("data contains non-finite entries")
    xc = x - x.mean(axis=0)
    s = xc.T @ xc / x.shape[0]
    return CovarianceMatrix(0.5 * (s + s.T), x.shape[0])


def _as_matrix(ref):
    if isinstance(ref, CovarianceMatrix):
        return ref.s
    if isinstance(ref, SpdPair):
        return ref.sigma
    return np.asarray(ref, dtype=float)


def cross_entropy(ref, model):
    """``0.5 * (<ref, kappa> - log det kappa)`` for ``N(0, ref)`` against ``model``.

    ``ref`` may be a :class:`CovarianceMatrix`, a :class:`SpdPair` (its sigma is
    used) or a bare matrix; ``model`` is an :class:`SpdPair`.
    """
    s = _as_matrix(ref)
    kappa = model.kappa
    if s.shape != kappa.shape:
        raise ValueError(f"shape mismatch {s.shape} vs {kappa.shape}")
    return 0.5 * (float(np.sum(s * kappa)) - logdet(kappa))


def kl_divergence(true_model, model):
    """KL(N(0, true.sigma) || N(0, model.sigma)) as a difference of cross-entropies."""
    return cross_entropy(true_model.sigma, model) - cross_entropy(true_model.sigma, true_model)


def sample_gaussian(model, n, seed):
    """``n`` i.i.d. rows from N(0, model.sigma) via the Cholesky factor."""
    if n < 2:
        raise ValueError("n must be >= 2 (a Dataset holds at least two rows)")
    sigma = model.sigma if isinstance(model, SpdPair) else np.asarray(model, dtype=float)
    L = cholesky(sigma)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    z = rng.standard_normal((n, sigma.shape[0]))
    return Dataset(z @ L.T)


def standardize(data):
    """Centre each column and scale it to unit (1/n) variance.

    Zero-variance columns are centred but left unscaled.
    """
    x = data.values if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    xc = x - x.mean(axis=0)
    sd = np.sqrt(np.mean(xc**2, axis=0))
    sd[sd == 0] = 1.0
    return xc / sd
