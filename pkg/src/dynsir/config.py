"""Run configuration files: TOML -> ModelSpec + ExperimentConfig.

Two tables.  `[model]` holds the type count, fractions, rate coefficients
and scaling exponents; `[experiment]` the ensemble sizes, budget, seed and
alignment choices.  Matrices are row-major: either a flat list of k*k
numbers, k rows of k, or a bare scalar broadcast to the whole matrix.
Vectors likewise accept a scalar.  Unknown keys are rejected rather than
ignored so typos surface immediately.

    [model]
    k = 1
    p = 1.0
    lambda = 3.0
    mu = 1.0
    beta = 1.0
    gamma = 1.0
    kappa_lambda = -1.0
    kappa_mu = 0.0
    kappa_beta = 0.0

    [experiment]
    n_list = [1000, 10000]
    runs_per_n = 200
    master_seed = 20260822
    threshold_exponent = 0.7083333333333334
    pin_level = 0.01
    window = [-2.0, 8.0]
    grid_step = 0.01
"""

from __future__ import annotations

from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - 3.10 fallback
    import tomli as tomllib

from .errors import ConfigError
from .harness import ExperimentConfig
from .params import ModelSpec
from .simulate import DEFAULT_THRESHOLD_EXPONENT

_MODEL_KEYS = {"k", "p", "lambda", "mu", "beta", "gamma",
               "kappa_lambda", "kappa_mu", "kappa_beta"}
_EXPERIMENT_KEYS = {"n_list", "runs_per_n", "master_seed", "threshold_exponent",
                    "pin_level", "window", "grid_step"}


def _number(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {x!r}")
    return float(x)


def _matrix(val, k: int, where: str):
    """Scalar, flat k*k list, or k nested rows -> value usable by ModelSpec."""
    if isinstance(val, (int, float)) and not isinstance(val, bool):
        return float(val)
    if not isinstance(val, list):
        raise ConfigError(f"{where}: expected a number or list, got {val!r}")
    if val and isinstance(val[0], list):
        if len(val) != k or any(not isinstance(row, list) or len(row) != k
                                for row in val):
            raise ConfigError(f"{where}: nested form must be {k} rows of {k}")
        return [[_number(x, where) for x in row] for row in val]
    if len(val) != k * k:
        raise ConfigError(
            f"{where}: flat matrix needs {k * k} entries (row-major), got {len(val)}")
    flat = [_number(x, where) for x in val]
    return [flat[r * k:(r + 1) * k] for r in range(k)]


def _vector(val, k: int, where: str):
    if isinstance(val, (int, float)) and not isinstance(val, bool):
        return float(val)
    if not isinstance(val, list) or len(val) != k:
        raise ConfigError(f"{where}: expected a number or a list of {k}")
    return [_number(x, where) for x in val]


def spec_from_dict(model: dict, where: str = "model") -> ModelSpec:
    unknown = set(model) - _MODEL_KEYS
    if unknown:
        raise ConfigError(f"[{where}] unknown keys: {', '.join(sorted(unknown))}")
    if "k" not in model:
        raise ConfigError(f"[{where}] missing required key 'k'")
    k = model["k"]
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise ConfigError(f"[{where}] k must be a positive integer, got {k!r}")
    required = {"lambda", "mu", "beta", "gamma"}
    missing = required - set(model)
    if missing:
        raise ConfigError(f"[{where}] missing required keys: "
                          f"{', '.join(sorted(missing))}")
    p = model.get("p", 1.0 / k)
    try:
        return ModelSpec(
            k=k,
            p=_vector(p, k, f"{where}.p"),
            lam=_matrix(model["lambda"], k, f"{where}.lambda"),
            mu=_matrix(model["mu"], k, f"{where}.mu"),
            beta=_matrix(model["beta"], k, f"{where}.beta"),
            gamma=_vector(model["gamma"], k, f"{where}.gamma"),
            kappa_lam=_matrix(model.get("kappa_lambda", 0.0), k,
                              f"{where}.kappa_lambda"),
            kappa_mu=_matrix(model.get("kappa_mu", 0.0), k, f"{where}.kappa_mu"),
            kappa_beta=_matrix(model.get("kappa_beta", 0.0), k,
                               f"{where}.kappa_beta"),
        )
    except ValueError as exc:
        raise ConfigError(f"[{where}] {exc}") from exc


def experiment_from_dict(spec: ModelSpec, experiment: dict) -> ExperimentConfig:
    unknown = set(experiment) - _EXPERIMENT_KEYS
    if unknown:
        raise ConfigError(f"[experiment] unknown keys: "
                          f"{', '.join(sorted(unknown))}")
    n_list = experiment.get("n_list", [1000])
    if not isinstance(n_list, list) or not n_list or any(
            isinstance(n, bool) or not isinstance(n, int) for n in n_list):
        raise ConfigError("[experiment] n_list must be a list of integers")
    window = experiment.get("window", [-2.0, 8.0])
    if not isinstance(window, list) or len(window) != 2:
        raise ConfigError("[experiment] window must be [u_min, u_max]")
    seed = experiment.get("master_seed", 1)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("[experiment] master_seed must be an integer")
    try:
        return ExperimentConfig(
            spec=spec,
            n_list=tuple(n_list),
            runs_per_n=int(experiment.get("runs_per_n", 100)),
            master_seed=seed,
            threshold_exponent=_number(
                experiment.get("threshold_exponent", DEFAULT_THRESHOLD_EXPONENT),
                "experiment.threshold_exponent"),
            pin_level=_number(experiment.get("pin_level", 0.01),
                              "experiment.pin_level"),
            window=(_number(window[0], "experiment.window"),
                    _number(window[1], "experiment.window")),
            grid_step=_number(experiment.get("grid_step", 0.01),
                              "experiment.grid_step"),
        )
    except ValueError as exc:
        raise ConfigError(f"[experiment] {exc}") from exc


def load_config(path) -> ExperimentConfig:
    """Parse a config file into an ExperimentConfig (spec included).

    Raises:
        ConfigError: missing file, syntax error, unknown or ill-typed keys,
            or values the model/experiment invariants reject.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    unknown = set(data) - {"model", "experiment"}
    if unknown:
        raise ConfigError(f"{path}: unknown top-level tables: "
                          f"{', '.join(sorted(unknown))}")
    if "model" not in data:
        raise ConfigError(f"{path}: missing [model] table")
    spec = spec_from_dict(data["model"])
    return experiment_from_dict(spec, data.get("experiment", {}))
