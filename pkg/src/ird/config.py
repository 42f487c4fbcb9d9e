"""JSON configuration schema: strict parsing into model and sweep objects.

Unknown keys are rejected everywhere so silent typos cannot change an
experiment.  Kernel kinds: "er", "rank1", "chung-lu", "grg", "norros-reittu",
"finitary"; the weight-driven kinds imply their perturbation, the others
default to none.
"""

from __future__ import annotations

import json

import numpy as np

from .experiments import SweepSpec
from .kernels import (
    ConstantKernel,
    CoordPower,
    FinitaryKernel,
    ModelSpec,
    Rank1Kernel,
    WeightPerturbation,
    ZeroPerturbation,
    block_model,
    erdos_renyi,
    mean_total_weight,
    weight_model,
)
from .typespace import (
    ConfigurationError,
    DiscreteMeasure,
    Exponential,
    MeasureSpec,
    Pareto,
    ProductMeasure,
    TwoPoint,
    Uniform,
)

WEIGHT_KINDS = ("chung-lu", "grg", "norros-reittu")


def _require(obj: dict, context: str, required: tuple[str, ...],
             optional: tuple[str, ...] = ()) -> None:
    if not isinstance(obj, dict):
        raise ConfigurationError(f"{context} must be an object, got {type(obj).__name__}")
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise ConfigurationError(f"{context}: unknown keys {sorted(unknown)}")
    missing = [k for k in required if k not in obj]
    if missing:
        raise ConfigurationError(f"{context}: missing keys {missing}")


def _number(obj, context: str) -> float:
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise ConfigurationError(f"{context} must be a number, got {obj!r}")
    return float(obj)


def _integer(obj, context: str) -> int:
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise ConfigurationError(f"{context} must be an integer, got {obj!r}")
    return obj


def parse_law(obj: dict, context: str):
    _require(obj, context, ("kind",), ("a", "b", "rate", "alpha", "x_min", "v1", "v2", "p"))
    kind = obj["kind"]
    if kind == "uniform":
        _require(obj, context, ("kind", "a", "b"))
        return Uniform(_number(obj["a"], f"{context}.a"), _number(obj["b"], f"{context}.b"))
    if kind == "exponential":
        _require(obj, context, ("kind", "rate"))
        return Exponential(_number(obj["rate"], f"{context}.rate"))
    if kind == "pareto":
        _require(obj, context, ("kind", "alpha", "x_min"))
        return Pareto(_number(obj["alpha"], f"{context}.alpha"),
                      _number(obj["x_min"], f"{context}.x_min"))
    if kind == "two-point":
        _require(obj, context, ("kind", "v1", "v2", "p"))
        return TwoPoint(_number(obj["v1"], f"{context}.v1"),
                        _number(obj["v2"], f"{context}.v2"),
                        _number(obj["p"], f"{context}.p"))
    raise ConfigurationError(f"{context}: unknown law kind {kind!r}")


def parse_measure(obj: dict, context: str = "measure") -> MeasureSpec:
    _require(obj, context, ("kind",), ("atoms", "weights", "laws"))
    kind = obj.get("kind")
    if kind == "discrete":
        _require(obj, context, ("kind", "atoms", "weights"))
        atoms = obj["atoms"]
        if not isinstance(atoms, list) or not all(isinstance(a, list) for a in atoms):
            raise ConfigurationError(f"{context}.atoms must be a list of coordinate lists")
        return DiscreteMeasure(
            atoms=tuple(tuple(_number(c, f"{context}.atoms") for c in a) for a in atoms),
            weights=tuple(_number(w, f"{context}.weights") for w in obj["weights"]),
        )
    if kind == "product":
        _require(obj, context, ("kind", "laws"))
        laws = obj["laws"]
        if not isinstance(laws, list):
            raise ConfigurationError(f"{context}.laws must be a list")
        return ProductMeasure(laws=tuple(
            parse_law(law, f"{context}.laws[{i}]") for i, law in enumerate(laws)
        ))
    raise ConfigurationError(f"{context}: unknown measure kind {kind!r}")


def _parse_factor(obj: dict, context: str) -> CoordPower:
    _require(obj, context, (), ("coord", "power", "scale"))
    return CoordPower(
        coord=_integer(obj.get("coord", 0), f"{context}.coord"),
        power=_number(obj.get("power", 1.0), f"{context}.power"),
        scale=_number(obj.get("scale", 1.0), f"{context}.scale"),
    )


def parse_model(obj: dict, context: str = "") -> ModelSpec:
    """Build a ModelSpec from the measure/kernel/phi sections."""
    prefix = f"{context}." if context else ""
    _require(obj, context or "config", ("kernel",), ("measure", "phi", "label"))
    kernel_obj = obj["kernel"]
    _require(kernel_obj, f"{prefix}kernel", ("kind",),
             ("lambda", "theta", "kappa_minus", "kappa_plus", "c"))
    kind = kernel_obj["kind"]
    label = obj.get("label")
    measure = parse_measure(obj["measure"], f"{prefix}measure") if "measure" in obj else None

    if kind == "er":
        _require(kernel_obj, f"{prefix}kernel", ("kind", "lambda"))
        phi = _parse_phi(obj.get("phi"), f"{prefix}phi", measure)
        if not isinstance(phi, ZeroPerturbation):
            raise ConfigurationError("er admits only the zero perturbation")
        lam = _number(kernel_obj["lambda"], f"{prefix}kernel.lambda")
        if measure is not None:
            return ModelSpec(measure=measure, kernel=ConstantKernel(lam=lam),
                             phi=ZeroPerturbation(), label=label or f"er(lambda={lam:g})")
        return erdos_renyi(lam, label=label)

    if measure is None:
        raise ConfigurationError(f"kernel kind {kind!r} requires a measure section")

    if kind in WEIGHT_KINDS:
        _require(kernel_obj, f"{prefix}kernel", ("kind",), ("theta",))
        theta = kernel_obj.get("theta", "auto")
        if theta == "auto":
            theta = mean_total_weight(measure)
        else:
            theta = _number(theta, f"{prefix}kernel.theta")
        phi_obj = obj.get("phi")
        if phi_obj is not None:
            _require(phi_obj, f"{prefix}phi", ("kind",), ("theta",))
            if phi_obj["kind"] != kind:
                raise ConfigurationError(
                    f"perturbation kind {phi_obj['kind']!r} conflicts with kernel {kind!r}"
                )
        return weight_model(kind, measure, theta=theta, label=label)

    if kind == "rank1":
        _require(kernel_obj, f"{prefix}kernel", ("kind", "kappa_minus", "kappa_plus"))
        kernel = Rank1Kernel(
            kappa_minus=_parse_factor(kernel_obj["kappa_minus"], f"{prefix}kernel.kappa_minus"),
            kappa_plus=_parse_factor(kernel_obj["kappa_plus"], f"{prefix}kernel.kappa_plus"),
        )
        phi = _parse_phi(obj.get("phi"), f"{prefix}phi", measure)
        return ModelSpec(measure=measure, kernel=kernel, phi=phi, label=label or "rank1")

    if kind == "finitary":
        _require(kernel_obj, f"{prefix}kernel", ("kind", "c"))
        phi = _parse_phi(obj.get("phi"), f"{prefix}phi", measure)
        if not isinstance(phi, ZeroPerturbation):
            raise ConfigurationError("finitary kernels admit only the zero perturbation")
        if not isinstance(measure, DiscreteMeasure):
            raise ConfigurationError("finitary kernels require a discrete measure")
        c = np.asarray(kernel_obj["c"], dtype=float)
        return block_model(measure, c, label=label)

    raise ConfigurationError(f"unknown kernel kind {kind!r}")


def _parse_phi(obj, context: str, measure: MeasureSpec | None):
    if obj is None:
        return ZeroPerturbation()
    _require(obj, context, ("kind",), ("theta",))
    kind = obj["kind"]
    if kind == "zero":
        return ZeroPerturbation()
    if kind in WEIGHT_KINDS:
        if measure is None:
            raise ConfigurationError(f"{context}: weight perturbations require a measure")
        theta = obj.get("theta", "auto")
        if theta == "auto":
            theta = mean_total_weight(measure)
        else:
            theta = _number(theta, f"{context}.theta")
        return WeightPerturbation(kind=kind, theta=theta)
    raise ConfigurationError(f"{context}: unknown perturbation kind {kind!r}")


TOP_LEVEL_KEYS = ("measure", "kernel", "phi", "label", "n", "seed", "mode",
                  "predict", "sweep")


def load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"malformed JSON in {path}: {exc}") from None
    _require(obj, "config", (), TOP_LEVEL_KEYS)
    return obj


def parse_generation(obj: dict) -> tuple[ModelSpec, int, int, str]:
    """(model, n, seed, mode) from a top-level config."""
    for key in ("kernel", "n", "seed"):
        if key not in obj:
            raise ConfigurationError(f"config: missing key {key!r}")
    model = parse_model({k: obj[k] for k in ("measure", "kernel", "phi", "label") if k in obj})
    n = _integer(obj["n"], "n")
    if n < 1:
        raise ConfigurationError(f"n must be >= 1, got {n}")
    seed = _integer(obj["seed"], "seed")
    mode = obj.get("mode", "auto")
    if not isinstance(mode, str):
        raise ConfigurationError("mode must be a string")
    return model, n, seed, mode


def parse_predict(obj: dict) -> tuple[ModelSpec, dict]:
    """(model, options) for the prediction command."""
    if "kernel" not in obj:
        raise ConfigurationError("config: missing key 'kernel'")
    model = parse_model({k: obj[k] for k in ("measure", "kernel", "phi", "label") if k in obj})
    section = obj.get("predict", {})
    _require(section, "predict", (), ("resolution", "tol", "max_iter"))
    options = {
        "resolution": _integer(section.get("resolution", 4), "predict.resolution"),
        "tol": _number(section.get("tol", 1e-12), "predict.tol"),
        "max_iter": _integer(section.get("max_iter", 10**6), "predict.max_iter"),
    }
    return model, options


def parse_sweep(obj: dict, threads: int | None = None) -> SweepSpec:
    if "sweep" not in obj:
        raise ConfigurationError("config: missing 'sweep' section")
    section = obj["sweep"]
    _require(section, "sweep", ("models", "ns", "seeds"),
             ("ks", "resolution", "bp_reps", "bp_seed", "mode"))
    models_obj = section["models"]
    if not isinstance(models_obj, list):
        raise ConfigurationError("sweep.models must be a list")
    models = tuple(
        parse_model(m, f"sweep.models[{i}]") for i, m in enumerate(models_obj)
    )
    return SweepSpec(
        models=models,
        ns=tuple(_integer(n, "sweep.ns") for n in section["ns"]),
        seeds=tuple(_integer(s, "sweep.seeds") for s in section["seeds"]),
        ks=tuple(_integer(k, "sweep.ks") for k in section.get("ks", [1, 2, 5, 10, 50, 200])),
        resolution=_integer(section.get("resolution", 4), "sweep.resolution"),
        bp_reps=_integer(section.get("bp_reps", 20_000), "sweep.bp_reps"),
        bp_seed=_integer(section.get("bp_seed", 0), "sweep.bp_seed"),
        mode=section.get("mode", "auto"),
        threads=threads,
    )
