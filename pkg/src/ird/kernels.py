"""Kernels, perturbations, and full model specifications.

A kernel is a nonnegative function on pairs of types that sets arc
probabilities as min(kernel(x_i, x_j) * (1 + phi_n(x_i, x_j)) / n, 1); the
perturbation phi_n depends on the realized type sequence through
l_n = sum_i (x_i^+ + x_i^-).  The classic models are built in:

  er             constant kernel, no perturbation
  chung-lu       p_ij = min(x_i^- x_j^+ / l_n, 1)
  grg            p_ij = x_i^- x_j^+ / (l_n + x_i^- x_j^+)
  norros-reittu  p_ij = 1 - exp(-x_i^- x_j^+ / l_n)
  finitary       block-constant kernel over a partition (exact block model)
  rank1          product kernel kminus(x) * kplus(y)

Coordinate convention for two-sided weights: x = (x^+, x^-), so coordinate 0
drives the in-degree and coordinate 1 the out-degree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .typespace import (
    AtomPartition,
    ConfigurationError,
    DiscreteMeasure,
    MeasureSpec,
    Partition,
    TypeSample,
    partition_for,
    theoretical_cell_weights,
)

COORD_PLUS = 0   # x^+
COORD_MINUS = 1  # x^-

MAX_GRID_CELLS = 1 << 20


class ModelValidityError(ValueError):
    """The model is ill-defined on the realized sample (e.g. phi <= -1)."""


class DomainError(ValueError):
    """A point lies outside the kernel's domain."""


# ---------------------------------------------------------------------------
# 1-D function specs used by rank-1 kernels


@dataclass(frozen=True)
class CoordPower:
    """f(x) = scale * x[coord]^power, monotone in the chosen coordinate."""

    coord: int = 0
    power: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if self.scale < 0:
            raise ConfigurationError("kernel factors must be nonnegative")

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.coord >= points.shape[1]:
            raise DomainError(f"coordinate {self.coord} missing from {points.shape[1]}-d types")
        if self.power == 0.0:
            return np.full(points.shape[0], self.scale)
        return self.scale * points[:, self.coord] ** self.power

    def inf_over_box(self, lo: np.ndarray, hi: np.ndarray) -> float:
        """Exact infimum over an axis-aligned box (monotone per coordinate)."""
        if self.power == 0.0:
            return self.scale
        edge = lo[self.coord] if self.power > 0 else hi[self.coord]
        if edge <= 0 and self.power < 0:
            raise DomainError("negative power needs a positive lower support bound")
        return float(self.scale * edge ** self.power)


# ---------------------------------------------------------------------------
# Kernel variants


@dataclass(frozen=True)
class ConstantKernel:
    lam: float

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigurationError(f"kernel constant must be nonnegative, got {self.lam}")


@dataclass(frozen=True)
class Rank1Kernel:
    """kernel(x, y) = kappa_minus(x) * kappa_plus(y)."""

    kappa_minus: CoordPower
    kappa_plus: CoordPower


@dataclass(frozen=True)
class FinitaryKernel:
    """Block-constant kernel: value c[s, t] on cell_s x cell_t."""

    partition: Partition
    c: np.ndarray

    def __post_init__(self):
        c = np.ascontiguousarray(self.c, dtype=float)
        m = self.partition.n_cells
        if c.shape != (m, m):
            raise ConfigurationError(f"block matrix must be {m}x{m}, got {c.shape}")
        if not np.all(np.isfinite(c)) or np.any(c < 0):
            raise ConfigurationError("block matrix entries must be finite and nonnegative")
        c.flags.writeable = False
        object.__setattr__(self, "c", c)


Kernel = ConstantKernel | Rank1Kernel | FinitaryKernel


def kernel_eval(kernel: Kernel, x, y) -> float:
    """Kernel value at a pair of type points."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if isinstance(kernel, ConstantKernel):
        return kernel.lam
    if isinstance(kernel, Rank1Kernel):
        return float(kernel.kappa_minus(x)[0] * kernel.kappa_plus(y)[0])
    s = kernel.partition.cell_index(x)[0]
    t = kernel.partition.cell_index(y)[0]
    return float(kernel.c[s, t])


def source_values(kernel: Kernel, points: np.ndarray) -> np.ndarray:
    """kappa_minus over all points (constant kernels factor as lam * 1)."""
    if isinstance(kernel, ConstantKernel):
        return np.full(points.shape[0], kernel.lam)
    if isinstance(kernel, Rank1Kernel):
        return kernel.kappa_minus(points)
    raise ConfigurationError("finitary kernels do not factor into source/target values")


def target_values(kernel: Kernel, points: np.ndarray) -> np.ndarray:
    if isinstance(kernel, ConstantKernel):
        return np.ones(points.shape[0])
    if isinstance(kernel, Rank1Kernel):
        return kernel.kappa_plus(points)
    raise ConfigurationError("finitary kernels do not factor into source/target values")


# ---------------------------------------------------------------------------
# Perturbations


@dataclass(frozen=True)
class ZeroPerturbation:
    kind: str = field(default="zero", init=False)


@dataclass(frozen=True)
class WeightPerturbation:
    """Perturbations of the built-in weight-driven models.

    All three divide the weight product a = x_i^- x_j^+ by the realized total
    l_n instead of theta * n; `theta` is the limit of l_n / n.
    """

    kind: str  # "chung-lu" | "grg" | "norros-reittu"
    theta: float

    def __post_init__(self):
        if self.kind not in ("chung-lu", "grg", "norros-reittu"):
            raise ConfigurationError(f"unknown perturbation kind: {self.kind}")
        if not self.theta > 0:
            raise ConfigurationError("theta must be positive")

    def phi(self, n: int, l_n: float, a) -> np.ndarray:
        """phi_n at pairs with weight product a, given the realized l_n."""
        a = np.asarray(a, dtype=float)
        if self.kind == "chung-lu":
            return np.full(a.shape, (self.theta * n - l_n) / l_n)
        if self.kind == "grg":
            return (self.theta * n - l_n - a) / (l_n + a)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = (n * self.theta * -np.expm1(-a / l_n) - a) / a
        # a -> 0 limit of the norros-reittu perturbation
        return np.where(a == 0.0, n * self.theta / l_n - 1.0, val)


PerturbationSpec = ZeroPerturbation | WeightPerturbation


@dataclass(frozen=True)
class ModelSpec:
    """A complete arc-probability model: measure, kernel, perturbation."""

    measure: MeasureSpec
    kernel: Kernel
    phi: PerturbationSpec
    label: str = "model"

    def __post_init__(self):
        if isinstance(self.phi, WeightPerturbation):
            if not isinstance(self.kernel, Rank1Kernel):
                raise ConfigurationError(
                    "weight perturbations require a rank-1 kernel"
                )
            if self.measure_dim < 2:
                raise ConfigurationError(
                    "weight perturbations need two-sided types (x^+, x^-)"
                )

    @property
    def measure_dim(self) -> int:
        return self.measure.dim


def total_weight(sample: TypeSample) -> float:
    """l_n = sum_i (x_i^+ + x_i^-)."""
    if sample.dim < 2:
        raise ModelValidityError("l_n needs two-sided types (x^+, x^-)")
    pts = sample.points
    return float(pts[:, COORD_PLUS].sum() + pts[:, COORD_MINUS].sum())


# ---------------------------------------------------------------------------
# Built-in model constructors


def _rank1_weight_kernel(theta: float) -> Rank1Kernel:
    s = 1.0 / math.sqrt(theta)
    return Rank1Kernel(
        kappa_minus=CoordPower(coord=COORD_MINUS, power=1.0, scale=s),
        kappa_plus=CoordPower(coord=COORD_PLUS, power=1.0, scale=s),
    )


def mean_total_weight(measure: MeasureSpec) -> float:
    """Exact E[X^+ + X^-], the default theta for the weight-driven models."""
    if measure.dim < 2:
        raise ConfigurationError("weight-driven models need two-sided types")
    if isinstance(measure, DiscreteMeasure):
        pts = np.asarray(measure.atoms, dtype=float)
        w = np.asarray(measure.weights)
        return float(w @ (pts[:, COORD_PLUS] + pts[:, COORD_MINUS]))
    return measure.laws[COORD_PLUS].moment(1.0) + measure.laws[COORD_MINUS].moment(1.0)


def erdos_renyi(lam: float, label: str | None = None) -> ModelSpec:
    """Directed homogeneous model: every ordered pair an arc w.p. min(lam/n, 1)."""
    measure = DiscreteMeasure(atoms=((0.0,),), weights=(1.0,))
    return ModelSpec(
        measure=measure,
        kernel=ConstantKernel(lam=lam),
        phi=ZeroPerturbation(),
        label=label or f"er(lambda={lam})",
    )


def weight_model(kind: str, measure: MeasureSpec, theta: float | None = None,
                 label: str | None = None) -> ModelSpec:
    """chung-lu / grg / norros-reittu on a measure over (x^+, x^-) pairs."""
    if theta is None:
        theta = mean_total_weight(measure)
    return ModelSpec(
        measure=measure,
        kernel=_rank1_weight_kernel(theta),
        phi=WeightPerturbation(kind=kind, theta=theta),
        label=label or f"{kind}(theta={theta:g})",
    )


def block_model(measure: DiscreteMeasure, c: np.ndarray, label: str | None = None) -> ModelSpec:
    """Deterministic kernel model: block-constant kernel over atom types."""
    kernel = FinitaryKernel(partition=AtomPartition(atoms=measure.atoms), c=c)
    return ModelSpec(measure=measure, kernel=kernel, phi=ZeroPerturbation(),
                     label=label or "finitary")


# ---------------------------------------------------------------------------
# Arc probabilities


def arc_probability_row(model: ModelSpec, sample: TypeSample, i: int) -> np.ndarray:
    """Exact arc probabilities from source i to every vertex (p_ii = 0)."""
    n = sample.n
    pts = sample.points
    phi = model.phi
    if isinstance(phi, ZeroPerturbation):
        if isinstance(model.kernel, FinitaryKernel):
            cells = model.kernel.partition.cell_index(pts)
            kv = model.kernel.c[cells[i], cells]
        else:
            kv = source_values(model.kernel, pts[i : i + 1])[0] * target_values(model.kernel, pts)
        p = np.minimum(kv / n, 1.0)
    else:
        l_n = total_weight(sample)
        a = pts[i, COORD_MINUS] * pts[:, COORD_PLUS]
        if phi.kind == "chung-lu":
            p = np.minimum(a / l_n, 1.0)
        elif phi.kind == "grg":
            p = a / (l_n + a)
        else:
            p = -np.expm1(-a / l_n)
    p[i] = 0.0
    return p


def arc_probability(model: ModelSpec, sample: TypeSample, i: int, j: int) -> float:
    """P(arc i -> j); zero on the diagonal."""
    if i == j:
        return 0.0
    return float(arc_probability_row(model, sample, i)[j])


def arc_probability_formula(model: ModelSpec, sample: TypeSample, i: int, j: int) -> float:
    """min(kernel * (1 + phi_n) / n, 1) assembled from its parts.

    Same value as arc_probability; kept separate so the closed forms can be
    checked against the defining formula.
    """
    if i == j:
        return 0.0
    x, y = sample.points[i], sample.points[j]
    kv = kernel_eval(model.kernel, x, y)
    if isinstance(model.phi, ZeroPerturbation):
        phi = 0.0
    else:
        a = x[COORD_MINUS] * y[COORD_PLUS]
        phi = float(model.phi.phi(sample.n, total_weight(sample), a))
    if phi <= -1.0:
        raise ModelValidityError(f"perturbation {phi} <= -1 at pair ({i}, {j})")
    return min(kv * (1.0 + phi) / sample.n, 1.0)


# ---------------------------------------------------------------------------
# Finitary approximation


def cell_infima(spec: CoordPower, partition: Partition) -> np.ndarray:
    """Per-cell infima of a monotone factor."""
    if isinstance(partition, AtomPartition):
        return spec(np.asarray(partition.atoms, dtype=float))
    out = np.empty(partition.n_cells)
    for t in range(partition.n_cells):
        lo, hi = partition.cell_bounds(t)
        out[t] = spec.inf_over_box(lo, hi)
    return out


def finitary_approximation(kernel: Kernel, measure: MeasureSpec, m: int) -> FinitaryKernel:
    """Block-constant minorant at grid resolution m.

    Cell values are exact infima over cell pairs, so the result never exceeds
    the kernel and grows pointwise as m increases (dyadic refinement).  For
    discrete measures the atom partition makes the approximation lossless.
    """
    if isinstance(kernel, FinitaryKernel):
        return kernel
    partition = partition_for(measure, m)
    if partition.n_cells > MAX_GRID_CELLS:
        raise ConfigurationError(
            f"grid would have {partition.n_cells} cells; lower the resolution"
        )
    if isinstance(kernel, ConstantKernel):
        c = np.full((partition.n_cells, partition.n_cells), kernel.lam)
    else:
        c = np.outer(cell_infima(kernel.kappa_minus, partition),
                     cell_infima(kernel.kappa_plus, partition))
    return FinitaryKernel(partition=partition, c=c)


# ---------------------------------------------------------------------------
# Irreducibility of finitary kernels


def _positive_block_scc(fk: FinitaryKernel, mu: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """SCC labels of the block digraph restricted to positive-weight cells."""
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import connected_components

    keep = np.flatnonzero(np.asarray(mu) > 0)
    adj = csr_matrix((fk.c[np.ix_(keep, keep)] > 0).astype(np.int8))
    _, labels = connected_components(adj, directed=True, connection="strong")
    return keep, labels


def is_irreducible(fk: FinitaryKernel, mu: np.ndarray) -> bool:
    """True iff the positive-weight block digraph is strongly connected."""
    mu = np.asarray(mu, dtype=float)
    if mu.shape[0] != fk.partition.n_cells:
        raise ConfigurationError("weights do not align with the kernel partition")
    if not np.any(mu > 0):
        raise ConfigurationError("all cell weights are zero")
    keep, labels = _positive_block_scc(fk, mu)
    return labels.max(initial=0) == 0


def quasi_irreducible_restriction(fk: FinitaryKernel, mu: np.ndarray) -> FinitaryKernel:
    """Zero the kernel outside one strongly connected block class.

    Among classes of the positive-weight block digraph that lie on a directed
    cycle of positive kernel entries, the one with the largest total weight is
    kept (ties: smallest member block id).  Without any such class the zero
    kernel is returned.
    """
    mu = np.asarray(mu, dtype=float)
    if not np.any(mu > 0):
        return FinitaryKernel(partition=fk.partition, c=np.zeros_like(fk.c))
    keep, labels = _positive_block_scc(fk, mu)
    sub = fk.c[np.ix_(keep, keep)] > 0
    best_key, best_members = None, None
    for lab in range(labels.max() + 1):
        members = keep[labels == lab]
        local = np.flatnonzero(labels == lab)
        on_cycle = len(members) > 1 or sub[local[0], local[0]]
        if not on_cycle:
            continue
        key = (-float(mu[members].sum()), int(members.min()))
        if best_key is None or key < best_key:
            best_key, best_members = key, members
    c = np.zeros_like(fk.c)
    if best_members is not None:
        c[np.ix_(best_members, best_members)] = fk.c[np.ix_(best_members, best_members)]
    return FinitaryKernel(partition=fk.partition, c=c)


def cell_weights(model: ModelSpec, partition: Partition) -> np.ndarray:
    return theoretical_cell_weights(model.measure, partition)
