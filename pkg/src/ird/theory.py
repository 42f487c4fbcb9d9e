"""Limit-theory predictions computed from a block-constant kernel.

A block kernel (cell values c[s, t], cell weights mu) induces a two-sided
multi-type branching process with Poisson offspring:

  inbound tree   an individual in block i begets Poisson(c[j, i] * mu[j])
                 children in block j, so m_plus[i, j]  = c[j, i] * mu[j];
  outbound tree  Poisson(c[i, j] * mu[j]),  m_minus[i, j] = c[i, j] * mu[j].

Survival probabilities of the two trees solve rho = 1 - exp(-M rho); their
weighted product is the limiting giant strongly-connected fraction.  The
Perron root of either mean matrix decides criticality (threshold 1), and the
block row sums are the mixing means of the limiting in/out degree law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ._rng import TAG_TREE, stream
from .kernels import CoordPower, FinitaryKernel, Rank1Kernel
from .typespace import ConfigurationError, DiscreteMeasure, MeasureSpec

CRITICAL_BAND = 1e-6
DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 10**6


class NumericalError(RuntimeError):
    """An iteration failed to converge; carries the final residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class BlockBranchingProcess:
    """Mean-progeny data of the two-sided block branching process.

    Zero-weight blocks are dropped at construction; `block_ids` maps the
    retained rows back to cells of the originating partition.
    """

    mu: np.ndarray
    c: np.ndarray
    m_plus: np.ndarray
    m_minus: np.ndarray
    block_ids: np.ndarray

    @property
    def n_blocks(self) -> int:
        return self.mu.shape[0]

    @property
    def lambda_plus(self) -> np.ndarray:
        """Per-block mean in-degree (mixing means of the limiting in-degree)."""
        return self.m_plus.sum(axis=1)

    @property
    def lambda_minus(self) -> np.ndarray:
        """Per-block mean out-degree."""
        return self.m_minus.sum(axis=1)

    @property
    def mean_arcs(self) -> float:
        """Limiting arcs-per-vertex: sum_{j,l} mu_j mu_l c[j, l]."""
        return float(self.mu @ self.c @ self.mu)


def build_bp(fk: FinitaryKernel, mu) -> BlockBranchingProcess:
    """Assemble the branching data from a block kernel and cell weights."""
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (fk.partition.n_cells,):
        raise ConfigurationError("cell weights do not match the kernel partition")
    if np.any(mu < 0) or not np.all(np.isfinite(mu)):
        raise ConfigurationError("cell weights must be finite and nonnegative")
    keep = np.flatnonzero(mu > 0)
    mu_k = mu[keep]
    c_k = fk.c[np.ix_(keep, keep)]
    m_plus = c_k.T * mu_k   # m_plus[i, j] = c[j, i] * mu[j]
    m_minus = c_k * mu_k    # m_minus[i, j] = c[i, j] * mu[j]
    return BlockBranchingProcess(mu=mu_k, c=c_k, m_plus=m_plus, m_minus=m_minus,
                                 block_ids=keep)


# ---------------------------------------------------------------------------
# Spectral radius


def spectral_radius(m: np.ndarray, tol: float = 1e-10) -> float:
    """Perron root of a nonnegative square matrix.

    Power iteration on m + I from a positive start; the unit shift makes the
    dominant eigenvalue strictly separated even for periodic block structures,
    and subtracts out exactly.  Falls back to a dense eigenvalue solve if the
    iteration stalls.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ConfigurationError(f"matrix must be square, got {m.shape}")
    if np.any(m < 0):
        raise ConfigurationError("matrix entries must be nonnegative")
    if not m.size or not m.any():
        return 0.0
    x = np.full(m.shape[0], 1.0 / math.sqrt(m.shape[0]))
    lam = 0.0
    for _ in range(100_000):
        y = m @ x + x
        norm = np.linalg.norm(y)
        lam_new = float(x @ y)
        x_new = y / norm
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)) and (
            np.max(np.abs(y - lam_new * x)) <= tol * (1.0 + np.max(m))
        ):
            return lam_new - 1.0
        x, lam = x_new, lam_new
    if m.shape[0] <= 4096:
        return float(np.max(np.abs(np.linalg.eigvals(m))))
    raise NumericalError("power iteration did not converge", residual=abs(lam))


# ---------------------------------------------------------------------------
# Survival probabilities


@dataclass(frozen=True)
class SurvivalSolution:
    rho_plus: np.ndarray
    rho_minus: np.ndarray
    rho_kappa: float
    iterations: int
    residual: float
    spectral_radius_plus: float
    spectral_radius_minus: float
    critical: bool


def _fixed_point(m: np.ndarray, tol: float, max_iter: int) -> tuple[np.ndarray, int]:
    """Maximal solution of rho = 1 - exp(-m rho), iterated down from ones."""
    if max_iter < 1:
        raise ConfigurationError("max_iter must be >= 1")
    rho = np.ones(m.shape[0])
    delta = math.inf
    for it in range(1, max_iter + 1):
        nxt = -np.expm1(-(m @ rho))
        delta = float(np.max(np.abs(nxt - rho)))
        rho = nxt
        if delta < tol:
            return rho, it
    raise NumericalError("survival fixed point did not converge", residual=delta)


def survival_probabilities(bp: BlockBranchingProcess, tol: float = DEFAULT_TOL,
                           max_iter: int = DEFAULT_MAX_ITER) -> SurvivalSolution:
    """Survival probabilities of both trees and the giant-SCC fraction.

    Iteration starts at the all-ones vector, which decreases monotonically to
    the maximal fixed point.  When the Perron root is below one the zero
    vector is the unique nonnegative fixed point, so it is returned without
    iterating (a change-based stop would otherwise leave an O(tol / (1 - r))
    remainder).  Solutions inside the critical band are flagged: convergence
    there is slow and the sign of rho is unreliable.
    """
    if tol <= 0:
        raise ConfigurationError("tolerance must be positive")
    r_plus = spectral_radius(bp.m_plus)
    r_minus = spectral_radius(bp.m_minus)

    def solve(m, r):
        if r <= 1.0 - CRITICAL_BAND:
            return np.zeros(m.shape[0]), 0
        return _fixed_point(m, tol, max_iter)

    rho_plus, it_p = solve(bp.m_plus, r_plus)
    rho_minus, it_m = solve(bp.m_minus, r_minus)
    res = max(
        float(np.max(np.abs(rho_plus - -np.expm1(-(bp.m_plus @ rho_plus))))),
        float(np.max(np.abs(rho_minus - -np.expm1(-(bp.m_minus @ rho_minus))))),
    )
    return SurvivalSolution(
        rho_plus=rho_plus,
        rho_minus=rho_minus,
        rho_kappa=float(bp.mu @ (rho_plus * rho_minus)),
        iterations=max(it_p, it_m),
        residual=res,
        spectral_radius_plus=r_plus,
        spectral_radius_minus=r_minus,
        critical=abs(r_plus - 1.0) < CRITICAL_BAND or abs(r_minus - 1.0) < CRITICAL_BAND,
    )


# ---------------------------------------------------------------------------
# Total-population Monte Carlo


def survival_ge_k_curve(bp: BlockBranchingProcess, root_weights, ks, reps: int,
                        seed: int) -> dict[int, tuple[float, float]]:
    """Monte Carlo estimates of P(both trees reach k) for every k in `ks`.

    All k share the same replications (each tree is grown once, to max(ks)),
    so the estimates are non-increasing in k by construction.  Returns
    {k: (estimate, standard error)}.
    """
    ks = sorted(set(int(k) for k in ks))
    if not ks or ks[0] < 1:
        raise ConfigurationError("k values must be >= 1")
    if reps < 1:
        raise ConfigurationError("reps must be >= 1")
    w = np.asarray(root_weights, dtype=float)
    if w.shape != (bp.n_blocks,) or np.any(w < 0) or w.sum() <= 0:
        raise ConfigurationError("root weights must be nonnegative over the blocks")
    w = w / w.sum()
    k_max = ks[-1]
    rng = stream(seed, TAG_TREE)
    roots = rng.choice(bp.n_blocks, size=reps, p=w)
    size_plus = _tree_sizes(bp.m_plus, roots, k_max, rng)
    size_minus = _tree_sizes(bp.m_minus, roots, k_max, rng)
    both = np.minimum(size_plus, size_minus)
    out = {}
    for k in ks:
        p_hat = float(np.count_nonzero(both >= k)) / reps
        out[k] = (p_hat, math.sqrt(p_hat * (1.0 - p_hat) / reps))
    return out


def _tree_sizes(m: np.ndarray, roots: np.ndarray, k_max: int,
                rng: np.random.Generator, max_generations: int = 100_000) -> np.ndarray:
    """Total population per replication, truncated at k_max."""
    reps = roots.shape[0]
    total = np.ones(reps, dtype=np.int64)
    if k_max <= 1:
        return total
    z = np.zeros((reps, m.shape[0]), dtype=np.int64)
    z[np.arange(reps), roots] = 1
    alive = np.ones(reps, dtype=bool)
    for _ in range(max_generations):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            return np.minimum(total, k_max)
        children = rng.poisson(z[idx] @ m)
        born = children.sum(axis=1)
        total[idx] += born
        z[idx] = children
        alive[idx[(born == 0) | (total[idx] >= k_max)]] = False
    raise NumericalError("branching simulation exceeded the generation cap",
                         residual=float(np.count_nonzero(alive)))


def survival_ge_k(bp: BlockBranchingProcess, root_weights, k: int, reps: int,
                  seed: int) -> tuple[float, float]:
    """(estimate, standard error) of the probability that both trees reach a
    population of k."""
    return survival_ge_k_curve(bp, root_weights, [k], reps, seed)[k]


# ---------------------------------------------------------------------------
# Degree law


def mixed_poisson_pmf(bp: BlockBranchingProcess, k: int, l: int) -> float:
    """P(in-degree = k, out-degree = l) under the limiting mixed-Poisson law."""
    if k < 0 or l < 0:
        return 0.0
    pk = stats.poisson.pmf(k, bp.lambda_plus)
    pl = stats.poisson.pmf(l, bp.lambda_minus)
    return float(bp.mu @ (pk * pl))


def mixed_poisson_grid(bp: BlockBranchingProcess, k_max: int, l_max: int) -> np.ndarray:
    """Matrix of joint pmf values over [0, k_max] x [0, l_max]."""
    ks = np.arange(k_max + 1)
    ls = np.arange(l_max + 1)
    pk = stats.poisson.pmf(ks[:, None], bp.lambda_plus[None, :])   # (k, blocks)
    pl = stats.poisson.pmf(ls[:, None], bp.lambda_minus[None, :])  # (l, blocks)
    return np.einsum("kb,lb,b->kl", pk, pl, bp.mu)


# ---------------------------------------------------------------------------
# Rank-1 threshold


def _factor_moment(measure: MeasureSpec, f: CoordPower, g: CoordPower) -> float:
    """E[f(X) g(X)] for power-form factors, exact."""
    if isinstance(measure, DiscreteMeasure):
        pts = np.asarray(measure.atoms, dtype=float)
        w = np.asarray(measure.weights)
        return float(w @ (f(pts) * g(pts)))
    laws = measure.laws
    for spec in (f, g):
        if spec.coord >= len(laws):
            raise ConfigurationError("kernel factor coordinate outside the measure")
    if f.coord == g.coord:
        return f.scale * g.scale * laws[f.coord].moment(f.power + g.power)
    return (f.scale * laws[f.coord].moment(f.power)
            * g.scale * laws[g.coord].moment(g.power))


def rank1_threshold(measure: MeasureSpec, kernel: Rank1Kernel) -> float:
    """E[kappa_minus(X) kappa_plus(X)]: the giant-SCC fraction of a rank-1
    model is positive exactly when this exceeds 1."""
    if not isinstance(kernel, Rank1Kernel):
        raise ConfigurationError("rank-1 threshold needs a rank-1 kernel")
    return _factor_moment(measure, kernel.kappa_minus, kernel.kappa_plus)
