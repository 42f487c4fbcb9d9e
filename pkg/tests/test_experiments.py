import json
import math

import numpy as np
import pytest

from ird.digraph import Digraph, joint_degree_table
from ird.experiments import (
    InsufficientDataError,
    SweepSpec,
    compare_N_geq_k,
    default_hill_order,
    degree_gof,
    hill_tail_index,
    run_sweep,
    sweep_columns,
)
from ird.generate import GenConfig, generate
from ird.kernels import cell_weights, erdos_renyi, finitary_approximation
from ird.theory import build_bp
from ird.typespace import ConfigurationError, Pareto, ProductMeasure, sample_types


def _er_bp(lam):
    model = erdos_renyi(lam)
    fk = finitary_approximation(model.kernel, model.measure, 1)
    return build_bp(fk, cell_weights(model, fk.partition))


# ---------------------------------------------------------------------------
# Hill estimator


def test_hill_on_exact_pareto_quantiles():
    n = 100_000
    u = (np.arange(n) + 0.5) / n
    values = (1.0 - u) ** (-1.0 / 2.0)  # exact Pareto(2) quantile grid
    est = hill_tail_index(values, n // 10)
    assert abs(est - 2.0) <= 0.1


def test_hill_all_equal_is_infinite():
    assert hill_tail_index(np.full(100, 3.0), 10) == math.inf


def test_hill_insufficient_data():
    with pytest.raises(InsufficientDataError):
        hill_tail_index(np.array([0.0, 0.0, 1.0, 2.0]), 5)


def test_hill_on_pareto_samples():
    rng = np.random.default_rng(0)
    n = 100_000
    k = default_hill_order(n)
    estimates = [hill_tail_index(1.0 + rng.pareto(2.5, n), k) for _ in range(10)]
    assert abs(np.mean(estimates) - 2.5) <= 0.3


def test_hill_ignores_zeros():
    rng = np.random.default_rng(1)
    values = 1.0 + rng.pareto(2.0, 50_000)
    padded = np.concatenate([values, np.zeros(10_000)])
    k = 500
    assert hill_tail_index(padded, k) == hill_tail_index(values, k)


# ---------------------------------------------------------------------------
# Degree goodness of fit


def test_gof_exact_match_is_zero():
    bp = _er_bp(0.0)
    table = joint_degree_table(Digraph.from_arcs(50, [], []))
    out = degree_gof(table, bp, cutoff=4)
    assert out["tv_distance"] == 0.0


def test_gof_er_sample_is_close():
    model = erdos_renyi(2.0)
    s = sample_types(model.measure, 30_000, seed=1)
    g = generate(GenConfig(model=model, n=30_000, seed=1), s)
    out = degree_gof(joint_degree_table(g), _er_bp(2.0), cutoff=14)
    assert out["tv_distance"] <= 0.03
    assert out["dof"] > 10
    # chi-square should be sane for a well-specified model
    from scipy import stats
    assert stats.chi2.sf(out["chi_square"], out["dof"]) > 1e-4


def test_gof_detects_wrong_model():
    model = erdos_renyi(2.0)
    s = sample_types(model.measure, 30_000, seed=2)
    g = generate(GenConfig(model=model, n=30_000, seed=2), s)
    out = degree_gof(joint_degree_table(g), _er_bp(4.0), cutoff=14)
    assert out["tv_distance"] > 0.3


# ---------------------------------------------------------------------------
# Truncated-component comparison


def test_compare_k1_trivial():
    model = erdos_renyi(1.5)
    s = sample_types(model.measure, 500, seed=3)
    g = generate(GenConfig(model=model, n=500, seed=3), s)
    out = compare_N_geq_k(g, _er_bp(1.5), 1, reps=100, seed=0)
    assert out["empirical"] == 1.0 and out["predicted"] == 1.0


def test_compare_supercritical_er():
    model = erdos_renyi(2.0)
    n = 100_000
    s = sample_types(model.measure, n, seed=4)
    g = generate(GenConfig(model=model, n=n, seed=4), s)
    out = compare_N_geq_k(g, _er_bp(2.0), 50, reps=40_000, seed=1)
    assert abs(out["empirical"] - out["predicted"]) <= 0.02 + 3 * out["se"]


def test_comonotone_weights_give_positively_correlated_degrees():
    from ird.typespace import DiscreteMeasure
    from ird.kernels import weight_model

    measure = DiscreteMeasure(atoms=((1.0, 1.0), (6.0, 6.0)), weights=(0.7, 0.3))
    model = weight_model("chung-lu", measure)
    s = sample_types(measure, 20_000, seed=6)
    g = generate(GenConfig(model=model, n=20_000, seed=6), s)
    corr = np.corrcoef(g.in_degrees(), g.out_degrees())[0, 1]
    assert corr > 0.1


def test_compare_subcritical_er():
    model = erdos_renyi(0.5)
    n = 100_000
    s = sample_types(model.measure, n, seed=5)
    g = generate(GenConfig(model=model, n=n, seed=5), s)
    out = compare_N_geq_k(g, _er_bp(0.5), 200, reps=5_000, seed=2)
    assert out["empirical"] <= 0.01


# ---------------------------------------------------------------------------
# Sweeps


def _tiny_sweep_spec(**overrides):
    base = dict(
        models=(erdos_renyi(2.0),),
        ns=(400,),
        seeds=(1,),
        ks=(1, 2, 5),
        resolution=2,
        bp_reps=2000,
        bp_seed=0,
    )
    base.update(overrides)
    return SweepSpec(**base)


def test_sweep_single_point_single_row():
    result = run_sweep(_tiny_sweep_spec())
    assert len(result.rows) == 1
    row = result.rows[0]
    assert row["label"] == "er(lambda=2.0)"
    assert row.get("error") is None
    assert row["rho_kappa"] == pytest.approx(0.6349095705, abs=1e-6)
    assert row["mean_arcs"] == pytest.approx(2.0)
    assert 0 <= row["c1_over_n"] <= 1


def test_sweep_empty_seeds_rejected():
    with pytest.raises(ConfigurationError):
        _tiny_sweep_spec(seeds=())


def test_sweep_duplicate_seeds_rejected():
    with pytest.raises(ConfigurationError):
        _tiny_sweep_spec(seeds=(1, 1))


def test_sweep_rows_satisfy_component_inequality():
    spec = _tiny_sweep_spec(models=(erdos_renyi(1.5), erdos_renyi(0.7)),
                            ns=(600,), seeds=(3, 4))
    result = run_sweep(spec)
    assert len(result.rows) == 4
    for row in result.rows:
        for k in spec.ks:
            assert row["c1_over_n"] <= row[f"n_geq_{k}_over_n"] + 1e-12


def test_sweep_phase_curve_monotone_in_lambda():
    lams = (0.5, 1.5, 2.5)
    spec = _tiny_sweep_spec(
        models=tuple(erdos_renyi(l) for l in lams),
        ns=(2000,),
        seeds=tuple(range(5)),
        ks=(1, 2),
    )
    result = run_sweep(spec)
    means, ses = [], []
    for lam in lams:
        vals = [r["c1_over_n"] for r in result.rows if r["label"] == f"er(lambda={lam})"]
        means.append(np.mean(vals))
        ses.append(np.std(vals, ddof=1) / math.sqrt(len(vals)))
    for a_mean, a_se, b_mean, b_se in zip(means, ses, means[1:], ses[1:]):
        pooled = math.hypot(a_se, b_se)
        assert b_mean >= a_mean - 2 * pooled


def test_sweep_arcs_match_prediction():
    spec = _tiny_sweep_spec(ns=(2000,), seeds=tuple(range(8)))
    result = run_sweep(spec)
    vals = [r["arcs_per_vertex"] for r in result.rows]
    sigma = np.std(vals, ddof=1)
    pred = result.rows[0]["mean_arcs"] * (2000 - 1) / 2000
    assert abs(np.mean(vals) - pred) <= max(4 * sigma / math.sqrt(len(vals)), 1e-3)


def test_sweep_error_rows_are_marked():
    from ird.kernels import CoordPower, ModelSpec, Rank1Kernel, ZeroPerturbation
    from ird.typespace import Uniform

    # the 3-d grid at resolution 8 exceeds the cell cap, so the prediction
    # step fails; the sweep must keep going and mark the rows
    wide = ModelSpec(
        measure=ProductMeasure(laws=(Uniform(0, 1),) * 3),
        kernel=Rank1Kernel(kappa_minus=CoordPower(), kappa_plus=CoordPower()),
        phi=ZeroPerturbation(),
        label="too-wide",
    )
    spec = _tiny_sweep_spec(models=(wide, erdos_renyi(2.0)), resolution=8)
    result = run_sweep(spec)
    assert len(result.rows) == 2
    bad_row, good_row = result.rows
    assert bad_row["label"] == "too-wide"
    assert "ConfigurationError" in bad_row["error"]
    assert good_row.get("error") is None
    assert good_row["rho_kappa"] > 0.6


def test_sweep_csv_and_sidecar(tmp_path):
    spec = _tiny_sweep_spec(seeds=(1, 2))
    result = run_sweep(spec)
    csv_path = tmp_path / "sweep.csv"
    meta_path = tmp_path / "sweep.meta.json"
    result.to_csv(csv_path)
    result.write_sidecar(meta_path)
    lines = csv_path.read_text().splitlines()
    assert lines[0] == ",".join(sweep_columns(spec.ks))
    assert len(lines) == 3
    meta = json.loads(meta_path.read_text())
    assert meta["row_seeds"] == [1, 2]
    assert "spec_hash" in meta and "version" in meta


def test_sweep_deterministic():
    spec = _tiny_sweep_spec(seeds=(5, 6))
    a = run_sweep(spec)
    b = run_sweep(spec)
    for ra, rb in zip(a.rows, b.rows):
        for col in a.columns:
            if col == "wall_time_ms":
                continue
            assert ra.get(col) == rb.get(col)
