"""
Run configuration for Fréchet U-Net.

Every constant the experiments depend on is a default here rather than a literal in
the code, so desk-scale smoke runs are just smaller configs. Configuration is parsed
first (YAML file, environment, flags) and validated afterwards, field by field.
"""

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional

import yaml

from frechet_unet.models.enums import NAIVE_MODEL, Ensemble, Metric, Variant
from frechet_unet.models.errors import ConfigError

SEED_ENV_VAR = "FGL_SEED"
DEFAULT_L_VALUES = [5, 7, 10, 12, 15, 17, 20, 22, 25]


@dataclass
class GenerationConfig:
    """Training/test data generation."""
    n: int = 28
    sample_size: int = 10
    count_params: int = 36
    batches_per_param: int = 10
    beta_shape_min: float = 0.5
    beta_shape_max: float = 5.0
    ier_constant_p: Optional[float] = None
    sbm_p_min: float = 0.5
    sbm_p_max: float = 0.9
    sbm_q_min: float = 0.01
    sbm_q_max: float = 0.5
    sbm_blocks_two: List[int] = field(default_factory=lambda: [14, 14])
    sbm_blocks_three: List[int] = field(default_factory=lambda: [10, 10, 8])
    sbm_max_attempts: int = 1000
    pa_l_values: List[int] = field(default_factory=lambda: list(DEFAULT_L_VALUES))
    pa_batches_per_l: int = 40


@dataclass
class TrainingConfig:
    """Adam / binary cross entropy training."""
    epochs: int = 100
    batch_size: int = 8
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    base_channels: int = 16


@dataclass
class EvaluationConfig:
    """Benchmark protocol."""
    trials: int = 90
    models: List[str] = field(
        default_factory=lambda: [v.value for v in Variant] + [NAIVE_MODEL]
    )
    ensembles: List[str] = field(default_factory=lambda: [e.value for e in Ensemble])
    eps_kl: float = 1e-6
    eps_rel: float = 1e-8
    binarize_threshold: float = 0.5
    rel_window: int = 10
    abs_curve_len: int = 25
    rel_curve_len: int = 5
    train_missing: bool = False


@dataclass
class OracleConfig:
    """Tiny-n exhaustive verification."""
    n: int = 4
    trials: int = 100
    sample_size: int = 5
    p: float = 0.9
    metric: str = Metric.HAMMING.value


@dataclass
class PathsConfig:
    datasets: str = "./runs/datasets"
    checkpoints: str = "./runs/checkpoints"
    reports: str = "./runs/reports"


SECTIONS = {
    "generation": GenerationConfig,
    "training": TrainingConfig,
    "evaluation": EvaluationConfig,
    "oracle": OracleConfig,
    "paths": PathsConfig,
}


@dataclass
class RunConfig:
    """Complete configuration of a run; ``digest()`` plus ``seed`` replays it."""
    seed: int = 20221
    threads: int = 1
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)

    @classmethod
    def load(cls, path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None,
             environ: Optional[Dict[str, str]] = None) -> "RunConfig":
        """
        Build a configuration: defaults, then the YAML file, then ``FGL_SEED``, then
        flag overrides (dotted keys such as ``training.epochs``). Validates the result.

        Args:
            path: Optional YAML config file
            overrides: Flag values; ``None`` values are ignored
            environ: Environment mapping, ``os.environ`` by default

        Returns:
            RunConfig: The validated configuration
        """
        config = cls()
        if path:
            try:
                with open(path, "r") as f:
                    data = yaml.safe_load(f) or {}
            except OSError as e:
                raise ConfigError("config", f"cannot read config file: {e}", path)
            except yaml.YAMLError as e:
                raise ConfigError("config", f"invalid YAML: {e}", path)
            if not isinstance(data, dict):
                raise ConfigError("config", "top level must be a mapping")
            config.update(_flatten(data))

        environ = os.environ if environ is None else environ
        if environ.get(SEED_ENV_VAR):
            config.update({"seed": environ[SEED_ENV_VAR]})

        if overrides:
            config.update({k: v for k, v in overrides.items() if v is not None})

        config.validate()
        return config

    def update(self, values: Dict[str, Any]):
        """Set dotted keys, coercing each value to the type of its default."""
        for key, value in values.items():
            section_name, _, name = key.rpartition(".")
            if section_name and section_name not in SECTIONS:
                raise ConfigError(key, "unknown config section")
            target = getattr(self, section_name) if section_name else self
            known = {f.name for f in fields(target)}
            if name not in known or (not section_name and name in SECTIONS):
                raise ConfigError(key, "unknown config field")
            setattr(target, name, _coerce(key, getattr(target, name), value))

    def validate(self):
        """Raise ConfigError naming the first out-of-range field."""
        _check(self.seed >= 0 and self.seed < 2 ** 64, "seed", "must be a 64-bit unsigned integer", self.seed)
        _check(self.threads >= 1, "threads", "must be >= 1", self.threads)

        g = self.generation
        _check(g.n >= 4 and g.n % 4 == 0, "generation.n", "must be a positive multiple of 4", g.n)
        _check(g.sample_size >= 1, "generation.sample_size", "must be >= 1", g.sample_size)
        _check(g.count_params >= 1, "generation.count_params", "must be >= 1", g.count_params)
        _check(g.batches_per_param >= 1, "generation.batches_per_param", "must be >= 1", g.batches_per_param)
        _check(0 < g.beta_shape_min <= g.beta_shape_max, "generation.beta_shape_min",
               "need 0 < beta_shape_min <= beta_shape_max", g.beta_shape_min)
        if g.ier_constant_p is not None:
            _check(0.0 <= g.ier_constant_p <= 1.0, "generation.ier_constant_p", "must lie in [0, 1]",
                   g.ier_constant_p)
        _check(0.0 <= g.sbm_p_min <= g.sbm_p_max <= 1.0, "generation.sbm_p_min",
               "need 0 <= sbm_p_min <= sbm_p_max <= 1", g.sbm_p_min)
        _check(0.0 <= g.sbm_q_min <= g.sbm_q_max <= 1.0, "generation.sbm_q_min",
               "need 0 <= sbm_q_min <= sbm_q_max <= 1", g.sbm_q_min)
        _check(g.sbm_q_max <= g.sbm_p_min, "generation.sbm_q_max",
               "must not exceed sbm_p_min (q <= p)", g.sbm_q_max)
        for name in ("sbm_blocks_two", "sbm_blocks_three"):
            blocks = getattr(g, name)
            _check(bool(blocks) and all(b > 0 for b in blocks) and sum(blocks) == g.n,
                   f"generation.{name}", f"block sizes must be positive and sum to n={g.n}", blocks)
        _check(g.sbm_max_attempts >= 1, "generation.sbm_max_attempts", "must be >= 1", g.sbm_max_attempts)
        _check(bool(g.pa_l_values) and all(1 <= l <= g.n - 2 for l in g.pa_l_values),
               "generation.pa_l_values", f"values must lie in [1, {g.n - 2}]", g.pa_l_values)
        _check(g.pa_batches_per_l >= 1, "generation.pa_batches_per_l", "must be >= 1", g.pa_batches_per_l)

        t = self.training
        _check(t.epochs >= 1, "training.epochs", "must be >= 1", t.epochs)
        _check(t.batch_size >= 1, "training.batch_size", "must be >= 1", t.batch_size)
        _check(t.lr > 0.0, "training.lr", "must be > 0", t.lr)
        _check(0.0 <= t.beta1 < 1.0, "training.beta1", "must lie in [0, 1)", t.beta1)
        _check(0.0 <= t.beta2 < 1.0, "training.beta2", "must lie in [0, 1)", t.beta2)
        _check(t.eps > 0.0, "training.eps", "must be > 0", t.eps)
        _check(t.base_channels >= 1, "training.base_channels", "must be >= 1", t.base_channels)

        e = self.evaluation
        _check(e.trials >= 1, "evaluation.trials", "must be >= 1", e.trials)
        valid_models = {v.value for v in Variant} | {NAIVE_MODEL}
        _check(bool(e.models) and set(e.models) <= valid_models, "evaluation.models",
               f"choose from {sorted(valid_models)}", e.models)
        valid_ensembles = {x.value for x in Ensemble}
        _check(bool(e.ensembles) and set(e.ensembles) <= valid_ensembles, "evaluation.ensembles",
               f"choose from {sorted(valid_ensembles)}", e.ensembles)
        _check(e.eps_kl > 0.0, "evaluation.eps_kl", "must be > 0", e.eps_kl)
        _check(e.eps_rel > 0.0, "evaluation.eps_rel", "must be > 0", e.eps_rel)
        _check(0.0 < e.binarize_threshold < 1.0, "evaluation.binarize_threshold", "must lie in (0, 1)",
               e.binarize_threshold)
        for name in ("rel_window", "abs_curve_len", "rel_curve_len"):
            value = getattr(e, name)
            _check(1 <= value <= g.n, f"evaluation.{name}", f"must lie in [1, {g.n}]", value)

        o = self.oracle
        _check(2 <= o.n <= 6, "oracle.n", "exhaustive search supports 2 <= n <= 6", o.n)
        _check(o.trials >= 1, "oracle.trials", "must be >= 1", o.trials)
        _check(o.sample_size >= 1, "oracle.sample_size", "must be >= 1", o.sample_size)
        _check(0.0 <= o.p <= 1.0, "oracle.p", "must lie in [0, 1]", o.p)
        _check(o.metric in {m.value for m in Metric}, "oracle.metric",
               f"choose from {[m.value for m in Metric]}", o.metric)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form, printed with the seed for replay."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _check(condition: bool, name: str, message: str, value: Any = None):
    if not condition:
        raise ConfigError(name, message, value)


def _flatten(data: Dict[str, Any]) -> Dict[str, Any]:
    flat = {}
    for key, value in data.items():
        if key in SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(key, "section must be a mapping")
            flat.update({f"{key}.{name}": v for name, v in value.items()})
        else:
            flat[key] = value
    return flat


def _coerce(key: str, default: Any, value: Any) -> Any:
    if value is None:
        return None
    try:
        if isinstance(default, bool):
            if isinstance(value, str):
                if value.lower() not in {"true", "false", "1", "0", "yes", "no"}:
                    raise ValueError(value)
                return value.lower() in {"true", "1", "yes"}
            return bool(value)
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if isinstance(default, float) or (default is None and key.endswith("_p")):
            return float(value)
        if isinstance(default, list):
            items = value.split(",") if isinstance(value, str) else list(value)
            items = [item.strip() if isinstance(item, str) else item for item in items]
            items = [item for item in items if item != ""]
            if default and isinstance(default[0], int):
                return [int(item) for item in items]
            return [str(item) for item in items]
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"cannot interpret value as {type(default).__name__}", value)
