"""Experiment configuration: YAML schema, validation and defaults.

Shipped power defaults are EARTH-style placeholders chosen to satisfy the
model invariants (operational above sleep power, macro/HAPS transmit power
above SBS transmit power); they are not measured values.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import yaml

from .errors import ConfigError
from .estimate import EstimatorSpec
from .ingest import SLOTS_PER_DAY, SynthParams, DEFAULT_CELL_SIZE_M
from .power import PowerParams

OPTIMIZERS = ("greedy", "exhaustive")
SINK_MODES = ("HAPS_only", "MBS_and_HAPS")

DEFAULT_POWER = {
    "sbs": {"operational_w": 56.0, "amplifier_eff": 2.6, "transmit_w": 6.3, "sleep_w": 6.0},
    "mbs": {"operational_w": 130.0, "amplifier_eff": 4.7, "transmit_w": 20.0, "sleep_w": 75.0},
    "haps": {"operational_w": 180.0, "amplifier_eff": 4.0, "transmit_w": 120.0, "sleep_w": 100.0},
}
# Capacity ratios put the offload marginal cost above the sleep saving at high
# SBS load, so the on/off decision flips over the diurnal cycle instead of
# collapsing to all-off.
DEFAULT_CAPACITY = {"sbs": 10.0, "mbs": 50.0, "haps": 50.0}
DEFAULT_BASE_LOAD = {"mbs": 0.2, "haps": 0.1}
DEFAULT_ESTIMATOR = {
    "method": None,
    "neighbor_count": 20,
    "distance_exponent": 1.0,
    "cluster_count": "elbow",
    "layer_count": 1,
    "seed": 0,
}
DEFAULT_SYNTH = {
    "grid_side": None,
    "spatial_correlation_length": 3 * DEFAULT_CELL_SIZE_M,
    "noise_std": 0.2,
    "seed": 0,
    "cell_size_m": DEFAULT_CELL_SIZE_M,
}


@dataclass(frozen=True)
class ExperimentConfig:
    sbs_count: int
    estimator: EstimatorSpec
    dataset: str | None = None
    synth: SynthParams | None = None
    iteration_count: int = 300
    slot_count: int = SLOTS_PER_DAY
    power: dict = field(default_factory=lambda: dict(DEFAULT_POWER))
    capacity: dict = field(default_factory=lambda: dict(DEFAULT_CAPACITY))
    base_load: dict = field(default_factory=lambda: dict(DEFAULT_BASE_LOAD))
    lambda_th: float = 0.1
    optimizer: str = "greedy"
    offload_sinks: str = "MBS_and_HAPS"
    exhaustive_limit: int = 14
    grid_side: int = 100
    cell_size_m: float = DEFAULT_CELL_SIZE_M
    mlc_mean_includes_estimates: bool = False
    cluster_features: str = "scalar"
    seed: int = 0
    output: str | None = None

    def power_params(self, tier: str) -> PowerParams:
        return PowerParams(**self.power[tier])

    def to_dict(self) -> dict:
        data = asdict(self)
        data["estimator"] = asdict(self.estimator)
        data["synth"] = asdict(self.synth) if self.synth else None
        if data["synth"] is not None:
            data["synth"]["temporal_profile"] = [float(v) for v in data["synth"]["temporal_profile"]]
        return data

    def to_yaml(self) -> str:
        """Canonical serialization; byte-stable for a fixed resolved config."""
        return yaml.safe_dump(self.to_dict(), sort_keys=True, default_flow_style=False)


def _merge_section(name: str, defaults: dict, given, required=()) -> dict:
    if given is None:
        given = {}
    if not isinstance(given, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown key '{name}.{sorted(unknown)[0]}'")
    merged = {**defaults, **given}
    for key in required:
        if merged.get(key) is None:
            raise ConfigError(f"missing required key '{name}.{key}'")
    return merged


def resolve_config(raw: dict) -> ExperimentConfig:
    """Validate a raw mapping and fill defaults; unknown keys are rejected."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    known = {
        "dataset", "synth", "sbs_count", "iteration_count", "slot_count",
        "estimator", "power", "capacity", "base_load", "lambda_th",
        "optimizer", "offload_sinks", "exhaustive_limit", "grid_side",
        "cell_size_m", "mlc_mean_includes_estimates", "cluster_features",
        "seed", "output",
    }
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown key '{sorted(unknown)[0]}'")

    if raw.get("sbs_count") is None:
        raise ConfigError("missing required key 'sbs_count'")
    if raw.get("dataset") is None and raw.get("synth") is None:
        raise ConfigError("either 'dataset' or 'synth' is required")

    est = _merge_section("estimator", DEFAULT_ESTIMATOR, raw.get("estimator"), required=("method",))
    try:
        estimator = EstimatorSpec(**est)
    except ValueError as exc:
        raise ConfigError(f"estimator: {exc}") from None

    synth = None
    if raw.get("synth") is not None:
        synth_defaults = {**DEFAULT_SYNTH, "temporal_profile": None}
        sy = _merge_section("synth", synth_defaults, raw["synth"], required=("grid_side",))
        if sy["temporal_profile"] is not None:
            sy["temporal_profile"] = tuple(sy["temporal_profile"])
        else:
            del sy["temporal_profile"]
        try:
            synth = SynthParams(**sy)
        except ValueError as exc:
            raise ConfigError(f"synth: {exc}") from None

    power = {
        tier: _merge_section(f"power.{tier}", DEFAULT_POWER[tier], section)
        for tier, section in _merge_section("power", {t: None for t in DEFAULT_POWER}, raw.get("power")).items()
    }
    for tier, params in power.items():
        try:
            PowerParams(**params)
        except ValueError as exc:
            raise ConfigError(f"power.{tier}: {exc}") from None
    capacity = _merge_section("capacity", DEFAULT_CAPACITY, raw.get("capacity"))
    if any(c <= 0 for c in capacity.values()):
        raise ConfigError("capacities must be > 0")
    base_load = _merge_section("base_load", DEFAULT_BASE_LOAD, raw.get("base_load"))
    if any(not 0.0 <= v <= 1.0 for v in base_load.values()):
        raise ConfigError("base loads must lie in [0, 1]")

    cfg = dict(
        sbs_count=int(raw["sbs_count"]),
        estimator=estimator,
        dataset=raw.get("dataset"),
        synth=synth,
        iteration_count=int(raw.get("iteration_count", 300)),
        slot_count=int(raw.get("slot_count", SLOTS_PER_DAY)),
        power=power,
        capacity=capacity,
        base_load=base_load,
        lambda_th=float(raw.get("lambda_th", 0.1)),
        optimizer=raw.get("optimizer", "greedy"),
        offload_sinks=raw.get("offload_sinks", "MBS_and_HAPS"),
        exhaustive_limit=int(raw.get("exhaustive_limit", 14)),
        grid_side=int(raw.get("grid_side", 100)),
        cell_size_m=float(raw.get("cell_size_m", DEFAULT_CELL_SIZE_M)),
        mlc_mean_includes_estimates=bool(raw.get("mlc_mean_includes_estimates", False)),
        cluster_features=raw.get("cluster_features", "scalar"),
        seed=int(raw.get("seed", 0)),
        output=raw.get("output"),
    )
    if cfg["sbs_count"] < 1:
        raise ConfigError("sbs_count must be >= 1")
    if cfg["iteration_count"] < 1:
        raise ConfigError("iteration_count must be >= 1")
    if not 1 <= cfg["slot_count"] <= SLOTS_PER_DAY:
        raise ConfigError(f"slot_count must lie in [1, {SLOTS_PER_DAY}]")
    if not 0.0 < cfg["lambda_th"] < 1.0:
        raise ConfigError("lambda_th must lie strictly inside (0, 1)")
    if cfg["optimizer"] not in OPTIMIZERS:
        raise ConfigError(f"optimizer must be one of {OPTIMIZERS}")
    if cfg["offload_sinks"] not in SINK_MODES:
        raise ConfigError(f"offload_sinks must be one of {SINK_MODES}")
    if cfg["cluster_features"] not in ("scalar", "profile"):
        raise ConfigError("cluster_features must be 'scalar' or 'profile'")
    return ExperimentConfig(**cfg)


def load_config(path) -> ExperimentConfig:
    """Read and validate a YAML experiment config file."""
    with open(path, encoding="utf-8") as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return resolve_config(raw or {})


def apply_overrides(config: ExperimentConfig, overrides: dict) -> ExperimentConfig:
    """Re-resolve the config with dotted-path overrides (e.g. estimator.n...)."""
    from .ingest import default_diurnal_profile

    data = config.to_dict()
    if data["synth"] is not None and config.synth is not None:
        if tuple(config.synth.temporal_profile) == default_diurnal_profile():
            data["synth"].pop("temporal_profile", None)
    for dotted, value in overrides.items():
        node = data
        parts = dotted.split(".")
        for part in parts[:-1]:
            if not isinstance(node.get(part), dict):
                raise ConfigError(f"unknown override path '{dotted}'")
            node = node[part]
        if parts[-1] not in node:
            raise ConfigError(f"unknown override path '{dotted}'")
        node[parts[-1]] = value
    return resolve_config(data)
