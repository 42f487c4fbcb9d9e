import numpy as np
import pytest

from ird.generate import (
    GenConfig,
    expected_arc_count,
    generate,
    resolve_mode,
    row_probability_fn,
)
from ird.kernels import (
    ConfigurationError,
    block_model,
    erdos_renyi,
    weight_model,
)
from ird.typespace import DiscreteMeasure, Pareto, ProductMeasure, sample_types

from oracles import two_sample_chi_square

TWO_BLOCK = block_model(
    DiscreteMeasure(atoms=((0.0,), (1.0,)), weights=(0.35, 0.65)),
    np.array([[1.2, 2.4], [0.7, 3.1]]),
)

CL_PARETO = weight_model(
    "chung-lu", ProductMeasure(laws=(Pareto(2.5, 1.0), Pareto(3.5, 1.0)))
)


def test_single_vertex_graph_is_empty():
    model = erdos_renyi(100.0)
    s = sample_types(model.measure, 1, seed=0)
    g = generate(GenConfig(model=model, n=1, seed=0), s)
    assert g.arc_count == 0


@pytest.mark.parametrize("mode", ["naive", "block-fast"])
def test_probability_one_gives_complete_digraph(mode):
    model = erdos_renyi(5.0)
    s = sample_types(model.measure, 5, seed=0)
    g = generate(GenConfig(model=model, n=5, seed=3, mode=mode), s)
    assert g.arc_count == 20
    assert np.all(g.out_degrees() == 4)


def test_er_density_over_seeds():
    model = erdos_renyi(2.0)
    vals = []
    for seed in range(10):
        s = sample_types(model.measure, 10_000, seed=seed)
        g = generate(GenConfig(model=model, n=10_000, seed=seed), s)
        vals.append(g.arc_count / 10_000)
    assert abs(np.mean(vals) - 2.0) <= 0.05


def test_mode_resolution():
    assert resolve_mode(GenConfig(model=erdos_renyi(1.0), n=2, seed=0)) == "block-fast"
    assert resolve_mode(GenConfig(model=TWO_BLOCK, n=2, seed=0)) == "block-fast"
    assert resolve_mode(GenConfig(model=CL_PARETO, n=2, seed=0)) == "rank1-fast"
    assert resolve_mode(GenConfig(model=CL_PARETO, n=2, seed=0, mode="naive")) == "naive"


def test_block_fast_rejects_perturbed_models():
    s = sample_types(CL_PARETO.measure, 10, seed=0)
    with pytest.raises(ConfigurationError):
        generate(GenConfig(model=CL_PARETO, n=10, seed=0, mode="block-fast"), s)


def test_invalid_mode_rejected():
    with pytest.raises(ConfigurationError):
        GenConfig(model=erdos_renyi(1.0), n=5, seed=0, mode="fast")


def test_sample_size_mismatch_rejected():
    s = sample_types(TWO_BLOCK.measure, 6, seed=0)
    with pytest.raises(ConfigurationError):
        generate(GenConfig(model=TWO_BLOCK, n=5, seed=0), s)


def test_structural_soundness():
    s = sample_types(TWO_BLOCK.measure, 300, seed=4)
    for mode in ("naive", "block-fast"):
        g = generate(GenConfig(model=TWO_BLOCK, n=300, seed=4, mode=mode), s)
        src, dst = g.arcs()
        assert not np.any(src == dst)
        assert len({(i, j) for i, j in zip(src, dst)}) == g.arc_count


def test_naive_and_block_fast_agree_in_distribution():
    """Two-sample chi-square on total arc counts, 2-block model, n=64."""
    n, seeds = 64, 2000
    s = sample_types(TWO_BLOCK.measure, n, seed=1)
    counts = {}
    for mode in ("naive", "block-fast"):
        counts[mode] = [
            generate(GenConfig(model=TWO_BLOCK, n=n, seed=seed, mode=mode), s).arc_count
            for seed in range(seeds)
        ]
    p = two_sample_chi_square(counts["naive"], counts["block-fast"])
    assert p > 0.001


def test_naive_and_rank1_fast_agree_in_distribution():
    n, seeds = 48, 1500
    s = sample_types(CL_PARETO.measure, n, seed=2)
    counts = {}
    for mode in ("naive", "rank1-fast"):
        counts[mode] = [
            generate(GenConfig(model=CL_PARETO, n=n, seed=seed, mode=mode), s).arc_count
            for seed in range(seeds)
        ]
    p = two_sample_chi_square(counts["naive"], counts["rank1-fast"])
    assert p > 0.001


@pytest.mark.parametrize("model,mode", [
    (TWO_BLOCK, "naive"),
    (TWO_BLOCK, "block-fast"),
    (CL_PARETO, "naive"),
    (CL_PARETO, "rank1-fast"),
])
def test_mean_arc_count_matches_expectation(model, mode):
    """Mean generated arcs within 4 sigma of the exact expectation, with
    sigma from the independent-Bernoulli variance bound."""
    n, seeds = 400, 20
    s = sample_types(model.measure, n, seed=9)
    expected = expected_arc_count(model, s)
    row = row_probability_fn(model, s)
    var = sum(float((row(i) * (1.0 - row(i))).sum()) for i in range(n))
    sigma_mean = np.sqrt(var / seeds)
    counts = [
        generate(GenConfig(model=model, n=n, seed=seed, mode=mode), s).arc_count
        for seed in range(seeds)
    ]
    assert abs(np.mean(counts) - expected) <= 4 * sigma_mean


@pytest.mark.parametrize("model,mode", [
    (TWO_BLOCK, "naive"),
    (TWO_BLOCK, "block-fast"),
    (CL_PARETO, "rank1-fast"),
])
def test_thread_count_never_changes_output(model, mode):
    n = 500
    s = sample_types(model.measure, n, seed=21)
    outputs = []
    for threads in (1, 4, 8):
        cfg = GenConfig(model=model, n=n, seed=77, mode=mode, threads=threads)
        g = generate(cfg, s)
        src, dst = g.arcs()
        outputs.append((src.tobytes(), dst.tobytes()))
    assert outputs[0] == outputs[1] == outputs[2]


def test_generation_deterministic_in_seed():
    s = sample_types(CL_PARETO.measure, 200, seed=0)
    g1 = generate(GenConfig(model=CL_PARETO, n=200, seed=5), s)
    g2 = generate(GenConfig(model=CL_PARETO, n=200, seed=5), s)
    g3 = generate(GenConfig(model=CL_PARETO, n=200, seed=6), s)
    assert np.array_equal(g1.arcs()[1], g2.arcs()[1])
    assert g1.arcs()[1].shape != g3.arcs()[1].shape or not np.array_equal(
        g1.arcs()[1], g3.arcs()[1]
    )
