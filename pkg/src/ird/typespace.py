"""Ground space for vertex types: measures, sampling, partitions, cell weights.

Types live in boxes of R^d (d small) or on a finite set of atoms.  Continuous
measures are products of 1-D laws sampled by inverse CDF; partitions are
either the atom partition (exact for discrete measures) or dyadic box grids
over a truncated support box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._rng import TAG_TYPES, stream

TAIL_EPS = 1e-6  # per-coordinate tail mass cut off when boxing an unbounded support
WEIGHT_TOL = 1e-12


class ConfigurationError(ValueError):
    """Invalid measure, kernel, or model parameters."""


class CoverageError(ValueError):
    """A sample point does not belong to any partition cell."""


# ---------------------------------------------------------------------------
# 1-D laws


@dataclass(frozen=True)
class Uniform:
    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ConfigurationError(f"uniform needs a < b, got [{self.a}, {self.b}]")

    def ppf(self, u):
        return self.a + (self.b - self.a) * u

    def cdf(self, x):
        return np.clip((x - self.a) / (self.b - self.a), 0.0, 1.0)

    def support(self):
        return self.a, self.b

    def box_hi(self):
        return self.b

    def moment(self, p: float) -> float:
        """E[X^p] for p > -1 (requires a >= 0 unless p is a nonneg integer)."""
        if p == 0:
            return 1.0
        a, b = self.a, self.b
        if a < 0 and p != int(p):
            raise ConfigurationError("fractional moment of a uniform law needs a >= 0")
        if p <= -1 and a <= 0:
            raise ConfigurationError(f"E[X^{p}] diverges for uniform on [{a}, {b}]")
        return (b ** (p + 1) - a ** (p + 1)) / ((b - a) * (p + 1))


@dataclass(frozen=True)
class Exponential:
    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ConfigurationError(f"exponential rate must be positive, got {self.rate}")

    def ppf(self, u):
        # -log1p(-u) is exact near u = 0 and maps [0,1) onto [0, inf)
        return -np.log1p(-u) / self.rate

    def cdf(self, x):
        return np.where(x <= 0, 0.0, -np.expm1(-self.rate * np.maximum(x, 0.0)))

    def support(self):
        return 0.0, math.inf

    def box_hi(self):
        return -math.log(TAIL_EPS) / self.rate

    def moment(self, p: float) -> float:
        if p <= -1:
            raise ConfigurationError(f"E[X^{p}] diverges for an exponential law")
        return math.gamma(p + 1) / self.rate ** p


@dataclass(frozen=True)
class Pareto:
    alpha: float
    x_min: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.x_min > 0):
            raise ConfigurationError(
                f"pareto needs alpha > 0 and x_min > 0, got ({self.alpha}, {self.x_min})"
            )

    def ppf(self, u):
        return self.x_min * (1.0 - u) ** (-1.0 / self.alpha)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= self.x_min, 0.0, 1.0 - (self.x_min / np.maximum(x, self.x_min)) ** self.alpha)

    def support(self):
        return self.x_min, math.inf

    def box_hi(self):
        return self.x_min * TAIL_EPS ** (-1.0 / self.alpha)

    def moment(self, p: float) -> float:
        if p >= self.alpha:
            raise ConfigurationError(
                f"E[X^{p}] is infinite for a pareto law with tail index {self.alpha}"
            )
        return self.alpha * self.x_min ** p / (self.alpha - p)


@dataclass(frozen=True)
class TwoPoint:
    """P(X = v1) = p, P(X = v2) = 1 - p, with v1 < v2."""

    v1: float
    v2: float
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ConfigurationError(f"two-point probability must be in [0,1], got {self.p}")
        if not self.v1 < self.v2:
            raise ConfigurationError("two-point law needs v1 < v2")

    def ppf(self, u):
        return np.where(np.asarray(u) < self.p, self.v1, self.v2)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < self.v1, 0.0, np.where(x < self.v2, self.p, 1.0))

    def support(self):
        return self.v1, self.v2

    def box_hi(self):
        return self.v2

    def atoms(self):
        return (self.v1, self.p), (self.v2, 1.0 - self.p)

    def moment(self, p: float) -> float:
        return self.p * self.v1 ** p + (1.0 - self.p) * self.v2 ** p


Law = Uniform | Exponential | Pareto | TwoPoint


# ---------------------------------------------------------------------------
# Measures


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely many atoms in R^d with probability weights."""

    atoms: tuple[tuple[float, ...], ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        atoms = tuple(tuple(float(c) for c in a) for a in self.atoms)
        weights = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)
        if len(atoms) == 0 or len(atoms) != len(weights):
            raise ConfigurationError("discrete measure needs matching, non-empty atoms and weights")
        dims = {len(a) for a in atoms}
        if len(dims) != 1:
            raise ConfigurationError("all atoms must share one dimension")
        if any(w < 0 for w in weights):
            raise ConfigurationError("weights must be nonnegative")
        if abs(sum(weights) - 1.0) > WEIGHT_TOL:
            raise ConfigurationError(f"weights must sum to 1, got {sum(weights)!r}")
        if len(set(atoms)) != len(atoms):
            raise ConfigurationError("atoms must be distinct")

    @property
    def dim(self) -> int:
        return len(self.atoms[0])

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        cum = np.cumsum(self.weights)
        cum[-1] = 1.0
        idx = np.searchsorted(cum, rng.random(n), side="right")
        return np.asarray(self.atoms, dtype=float)[idx]


@dataclass(frozen=True)
class ProductMeasure:
    """Independent 1-D laws, one per coordinate."""

    laws: tuple[Law, ...]

    def __post_init__(self):
        object.__setattr__(self, "laws", tuple(self.laws))
        if len(self.laws) == 0:
            raise ConfigurationError("product measure needs at least one coordinate law")
        if len(self.laws) > 3:
            raise ConfigurationError("type space limited to dimension <= 3")

    @property
    def dim(self) -> int:
        return len(self.laws)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        cols = [law.ppf(rng.random(n)) for law in self.laws]
        return np.column_stack(cols)


MeasureSpec = DiscreteMeasure | ProductMeasure


@dataclass(frozen=True)
class TypeSample:
    """Realized vertex types: n points in R^d plus their provenance."""

    n: int
    points: np.ndarray
    source: MeasureSpec
    seed: int

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] != self.n:
            raise ConfigurationError("points must be an (n, d) array")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def sample_types(spec: MeasureSpec, n: int, seed: int) -> TypeSample:
    """Draw n i.i.d. types from `spec`, reproducibly from `seed`."""
    if n < 1:
        raise ConfigurationError(f"n must be >= 1, got {n}")
    rng = stream(seed, TAG_TYPES)
    return TypeSample(n=n, points=spec.sample(n, rng), source=spec, seed=seed)


# ---------------------------------------------------------------------------
# Partitions


@dataclass(frozen=True)
class AtomPartition:
    """One singleton cell per atom of a discrete measure."""

    atoms: tuple[tuple[float, ...], ...]

    @property
    def n_cells(self) -> int:
        return len(self.atoms)

    def cell_index(self, points: np.ndarray) -> np.ndarray:
        lookup = {a: t for t, a in enumerate(self.atoms)}
        out = np.empty(points.shape[0], dtype=np.int64)
        for r, row in enumerate(points):
            key = tuple(float(c) for c in row)
            try:
                out[r] = lookup[key]
            except KeyError:
                raise CoverageError(f"point {key} is not an atom of the partition") from None
        return out

    def cell_bounds(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        a = np.asarray(self.atoms[t], dtype=float)
        return a, a


@dataclass(frozen=True)
class BoxPartition:
    """Uniform grid of axis-aligned boxes over a support box.

    Cells are half-open on the right except the last bin per coordinate; the
    outermost bins absorb everything beyond the box, so the partition covers
    all of R^d.
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    bins: tuple[int, ...]

    def __post_init__(self):
        if any(l >= h for l, h in zip(self.lo, self.hi)):
            raise ConfigurationError("box partition needs lo < hi per coordinate")
        if any(b < 1 for b in self.bins):
            raise ConfigurationError("box partition needs >= 1 bin per coordinate")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.bins))

    def edges(self, c: int) -> np.ndarray:
        return np.linspace(self.lo[c], self.hi[c], self.bins[c] + 1)

    def cell_index(self, points: np.ndarray) -> np.ndarray:
        if points.ndim != 2 or points.shape[1] != self.dim:
            raise CoverageError(f"points of dimension {points.shape} do not match the partition")
        flat = np.zeros(points.shape[0], dtype=np.int64)
        for c in range(self.dim):
            inner = self.edges(c)[1:-1]
            idx = np.searchsorted(inner, points[:, c], side="right")
            flat = flat * self.bins[c] + idx
        return flat

    def cell_bounds(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        lo = np.empty(self.dim)
        hi = np.empty(self.dim)
        rem = t
        for c in reversed(range(self.dim)):
            i = rem % self.bins[c]
            rem //= self.bins[c]
            e = self.edges(c)
            lo[c], hi[c] = e[i], e[i + 1]
        return lo, hi


Partition = AtomPartition | BoxPartition


def partition_for(spec: MeasureSpec, m: int) -> Partition:
    """Partition at resolution m: atoms for discrete measures (exact at any m),
    else a dyadic grid with 2^m bins per coordinate over the truncated box."""
    if m < 1:
        raise ConfigurationError(f"resolution must be >= 1, got {m}")
    if isinstance(spec, DiscreteMeasure):
        return AtomPartition(atoms=spec.atoms)
    lo = tuple(law.support()[0] for law in spec.laws)
    hi = tuple(law.box_hi() for law in spec.laws)
    return BoxPartition(lo=lo, hi=hi, bins=(2**m,) * spec.dim)


# ---------------------------------------------------------------------------
# Cell weights


def empirical_cell_weights(sample: TypeSample, partition: Partition) -> np.ndarray:
    """Fraction of sample points per cell."""
    idx = partition.cell_index(sample.points)
    return np.bincount(idx, minlength=partition.n_cells) / sample.n


def _law_bin_masses(law: Law, edges: np.ndarray) -> np.ndarray:
    """Exact probability mass of each bin, outermost bins absorbing the tails."""
    if isinstance(law, TwoPoint):
        # Atom mass lands in the same bin cell_index maps the atom to.
        masses = np.zeros(len(edges) - 1)
        inner = edges[1:-1]
        for value, weight in law.atoms():
            i = int(np.searchsorted(inner, value, side="right"))
            masses[i] += weight
        return masses
    cdf = np.asarray(law.cdf(edges), dtype=float)
    cdf[0] = 0.0
    cdf[-1] = 1.0
    return np.diff(cdf)


def theoretical_cell_weights(spec: MeasureSpec, partition: Partition) -> np.ndarray:
    """Exact measure of each partition cell."""
    if isinstance(partition, AtomPartition):
        if not isinstance(spec, DiscreteMeasure):
            raise ConfigurationError("atom partitions require a discrete measure")
        lookup = {a: w for a, w in zip(spec.atoms, spec.weights)}
        try:
            return np.array([lookup[a] for a in partition.atoms])
        except KeyError as exc:
            raise ConfigurationError(f"partition atom {exc} is not an atom of the measure") from None
    if isinstance(spec, DiscreteMeasure):
        idx = partition.cell_index(np.asarray(spec.atoms, dtype=float))
        return np.bincount(idx, weights=np.asarray(spec.weights), minlength=partition.n_cells)
    if spec.dim != partition.dim:
        raise ConfigurationError("measure and partition dimensions differ")
    w = np.ones(1)
    for c, law in enumerate(spec.laws):
        w = np.multiply.outer(w, _law_bin_masses(law, partition.edges(c))).reshape(-1)
    return w
