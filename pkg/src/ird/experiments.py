"""Sweep harness pairing simulated graphs with their limit-theory predictions.

Each grid point (model, n) gets one set of predictions from the block
approximation of its kernel; each seed then contributes one row of empirical
statistics measured on a freshly generated graph.  Companion estimators:
joint-degree goodness of fit, Hill tail-index estimation, and the truncated
in/out-component comparison.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .digraph import (
    Digraph,
    DegreeTable,
    arcs_per_vertex,
    both_components_ge_k_counts,
    fraction_both_components_ge_k,
    largest_scc,
)
from .generate import GenConfig, generate
from .kernels import ModelSpec, cell_weights, finitary_approximation
from .theory import (
    BlockBranchingProcess,
    build_bp,
    mixed_poisson_grid,
    spectral_radius,
    survival_ge_k_curve,
    survival_probabilities,
)
from .typespace import ConfigurationError, sample_types


class InsufficientDataError(ValueError):
    """Too few positive observations for the requested tail estimate."""


def default_hill_order(n: int) -> int:
    """Bias/variance compromise used when no order is given."""
    return math.ceil(n**0.6)


def hill_tail_index(values, k_order: int) -> float:
    """Hill estimate of the power-law tail index from the top k_order order
    statistics of the positive values; +inf when the top order statistics
    are all equal (zero log-spacings)."""
    values = np.asarray(values, dtype=float)
    positive = np.sort(values[values > 0])[::-1]
    if k_order < 1:
        raise ConfigurationError("k_order must be >= 1")
    if positive.size <= k_order:
        raise InsufficientDataError(
            f"need more than k_order={k_order} positive values, have {positive.size}"
        )
    logs = np.log(positive[:k_order]) - math.log(positive[k_order])
    s = float(logs.sum())
    if s <= 0.0:
        return math.inf
    return k_order / s


def degree_gof(table: DegreeTable, bp: BlockBranchingProcess, cutoff: int) -> dict:
    """Total-variation distance and chi-square between the empirical joint
    (in, out) degree pmf and the mixed-Poisson limit, over [0, cutoff]^2 with
    the residual mass lumped into one overflow cell; chi-square pools cells
    with expected count below 5."""
    if cutoff < 1:
        raise ConfigurationError("cutoff must be >= 1")
    n = table.n
    emp = np.zeros((cutoff + 1, cutoff + 1))
    overflow_emp = 0.0
    for (k, l), c in table.joint.items():
        if k <= cutoff and l <= cutoff:
            emp[k, l] = c / n
        else:
            overflow_emp += c / n
    theo = mixed_poisson_grid(bp, cutoff, cutoff)
    overflow_theo = max(0.0, 1.0 - float(theo.sum()))
    tv = 0.5 * (float(np.abs(emp - theo).sum()) + abs(overflow_emp - overflow_theo))

    observed = np.append(emp.ravel() * n, overflow_emp * n)
    expected = np.append(theo.ravel() * n, overflow_theo * n)
    big = expected >= 5.0
    obs_pool, exp_pool = float(observed[~big].sum()), float(expected[~big].sum())
    obs, exp = observed[big], expected[big]
    if exp_pool > 0.0:
        obs = np.append(obs, obs_pool)
        exp = np.append(exp, exp_pool)
    chi_square = float(((obs - exp) ** 2 / exp).sum()) if exp.size else 0.0
    return {"tv_distance": tv, "chi_square": chi_square, "dof": max(int(exp.size) - 1, 0)}


def compare_N_geq_k(g: Digraph, bp: BlockBranchingProcess, k: int, reps: int,
                    seed: int) -> dict:
    """Empirical fraction of vertices with both components >= k against the
    branching-process estimate of the same quantity."""
    predicted, se = survival_ge_k_curve(bp, bp.mu, [k], reps, seed)[k]
    return {
        "empirical": fraction_both_components_ge_k(g, k),
        "predicted": predicted,
        "se": se,
    }


# ---------------------------------------------------------------------------
# Sweeps


@dataclass(frozen=True)
class SweepSpec:
    models: tuple[ModelSpec, ...]
    ns: tuple[int, ...]
    seeds: tuple[int, ...]
    ks: tuple[int, ...] = (1, 2, 5, 10, 50, 200)
    resolution: int = 4
    bp_reps: int = 20_000
    bp_seed: int = 0
    mode: str = "auto"
    threads: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "ns", tuple(int(n) for n in self.ns))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "ks", tuple(sorted(set(int(k) for k in self.ks))))
        if not self.models or not self.ns or not self.seeds or not self.ks:
            raise ConfigurationError("sweep needs non-empty models, ns, seeds, and ks")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigurationError("sweep seeds must be distinct")
        if min(self.ks) < 1:
            raise ConfigurationError("sweep k values must be >= 1")


@dataclass
class SweepResult:
    columns: list[str]
    rows: list[dict]
    meta: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(self.columns) + "\n")
            for row in self.rows:
                fh.write(",".join(_format_cell(row.get(c)) for c in self.columns) + "\n")

    def write_sidecar(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.meta, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def sweep_columns(ks) -> list[str]:
    cols = ["label", "n", "seed", "arcs_per_vertex", "c1_over_n"]
    cols += [f"n_geq_{k}_over_n" for k in ks]
    cols += ["rho_kappa"]
    cols += [f"rho_geq_{k}" for k in ks]
    cols += ["mean_arcs", "spectral_radius", "wall_time_ms", "error"]
    return cols


def _predictions(model: ModelSpec, spec: SweepSpec) -> dict:
    fk = finitary_approximation(model.kernel, model.measure, spec.resolution)
    mu = cell_weights(model, fk.partition)
    bp = build_bp(fk, mu)
    sol = survival_probabilities(bp)
    curve = survival_ge_k_curve(bp, bp.mu, spec.ks, spec.bp_reps, spec.bp_seed)
    out = {
        "rho_kappa": sol.rho_kappa,
        "mean_arcs": bp.mean_arcs,
        "spectral_radius": sol.spectral_radius_plus,
    }
    for k in spec.ks:
        out[f"rho_geq_{k}"] = curve[k][0]
    return out


def run_sweep(spec: SweepSpec) -> SweepResult:
    """One row per (model, n, seed), in deterministic grid order.

    A failing grid point contributes rows with the `error` column set instead
    of aborting the sweep.
    """
    columns = sweep_columns(spec.ks)
    rows: list[dict] = []
    row_seeds: list[int] = []
    for model in spec.models:
        for n in spec.ns:
            base = {"label": model.label, "n": n}
            try:
                preds = _predictions(model, spec)
            except Exception as exc:  # noqa: BLE001 - recorded, not swallowed
                for seed in spec.seeds:
                    rows.append({**base, "seed": seed, "error": _errstr(exc)})
                    row_seeds.append(seed)
                continue
            for seed in spec.seeds:
                row = {**base, "seed": seed, **preds}
                try:
                    t0 = time.perf_counter()
                    sample = sample_types(model.measure, n, seed)
                    g = generate(
                        GenConfig(model=model, n=n, seed=seed, mode=spec.mode,
                                  threads=spec.threads),
                        sample,
                    )
                    size, _ = largest_scc(g)
                    counts = both_components_ge_k_counts(g, max(spec.ks))
                    row["arcs_per_vertex"] = arcs_per_vertex(g)
                    row["c1_over_n"] = size / n
                    for k in spec.ks:
                        row[f"n_geq_{k}_over_n"] = (
                            1.0 if k == 1
                            else float(np.count_nonzero(counts >= k)) / n
                        )
                    row["wall_time_ms"] = (time.perf_counter() - t0) * 1e3
                except Exception as exc:  # noqa: BLE001
                    row["error"] = _errstr(exc)
                rows.append(row)
                row_seeds.append(seed)
    meta = {
        "version": __version__,
        "spec_hash": _spec_hash(spec),
        "columns": columns,
        "row_seeds": row_seeds,
        "ks": list(spec.ks),
        "resolution": spec.resolution,
        "bp_reps": spec.bp_reps,
        "bp_seed": spec.bp_seed,
    }
    return SweepResult(columns=columns, rows=rows, meta=meta)


def _errstr(exc: Exception) -> str:
    return f"{type(exc).__name__}: {exc}".replace(",", ";").replace("\n", " ")


def _spec_hash(spec: SweepSpec) -> str:
    payload = repr(spec).encode()
    return hashlib.sha256(payload).hexdigest()[:16]
