"""Engine configuration: sampling caps, index parameters, criterion weights."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from enum import Enum

from .embedder import EmbeddingProviderConfig
from .errors import ConfigError

CONFIG_FORMAT_VERSION = 1

DEFAULT_INTERSECTION_WEIGHT = 0.5
DEFAULT_CRITERION_WEIGHT = 0.2

CRITERION_IDS = (
    "unique_values",
    "intersection_size",
    "join_size",
    "reverse_join_size",
    "value_semantics",
    "disjoint_value_semantics",
    "metadata_semantics",
)


class Mode(str, Enum):
    EXACT = "exact"
    MINHASH = "minhash"


@dataclass
class EngineConfig:
    """Every knob of the engine, with reproducible defaults.

    The raw criterion weights (0.5 for intersection size, 0.2 elsewhere)
    are renormalized over the active criteria before ranking.
    """

    sample_cap: int = 1_000_000
    inverted_row_cap: int = 10_000
    num_perm: int = 100
    top_n_per_strategy: int = 100
    k: int = 10
    intersection_weight: float = DEFAULT_INTERSECTION_WEIGHT
    criterion_weight: float = DEFAULT_CRITERION_WEIGHT
    weight_overrides: dict[str, float] = field(default_factory=dict)
    mode: Mode = Mode.EXACT
    provider: EmbeddingProviderConfig = field(default_factory=EmbeddingProviderConfig)
    seed: int = 42
    value_sentence_max: int = 512
    frequent_value_count: int = 20
    disjoint_sample_size: int = 50
    # Minhash-mode bundles keep only this many frequency-table entries per
    # column; per-value structures are what the approximate mode sheds.
    minhash_value_cap: int = 512

    def validate(self) -> None:
        for name in (
            "sample_cap",
            "inverted_row_cap",
            "num_perm",
            "top_n_per_strategy",
            "k",
            "value_sentence_max",
            "frequent_value_count",
            "disjoint_sample_size",
            "minhash_value_cap",
        ):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.intersection_weight < 0 or self.criterion_weight < 0:
            raise ConfigError("criterion weights must be non-negative")
        for key, value in self.weight_overrides.items():
            if key not in CRITERION_IDS:
                raise ConfigError(f"unknown criterion '{key}' in weight overrides")
            if value < 0:
                raise ConfigError(f"weight for '{key}' must be non-negative, got {value}")
        self.provider.validate()

    def raw_weights(self) -> dict[str, float]:
        """Per-criterion raw weights: defaults plus any overrides."""
        weights = {
            cid: (self.intersection_weight if cid == "intersection_size" else self.criterion_weight)
            for cid in CRITERION_IDS
        }
        weights.update(self.weight_overrides)
        return weights

    def with_overrides(
        self,
        k: int | None = None,
        weights: dict[str, float] | None = None,
        mode: str | Mode | None = None,
    ) -> "EngineConfig":
        updated = replace(self, provider=replace(self.provider))
        if k is not None:
            updated.k = k
        if weights:
            merged = dict(updated.weight_overrides)
            merged.update(weights)
            updated.weight_overrides = merged
        if mode is not None:
            updated.mode = Mode(mode)
        updated.validate()
        return updated

    def to_dict(self) -> dict:
        data = asdict(self)
        data["mode"] = self.mode.value
        data["provider"] = self.provider.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "EngineConfig":
        known = {f for f in cls.__dataclass_fields__}
        kwargs = {k: v for k, v in data.items() if k in known}
        kwargs["mode"] = Mode(data.get("mode", "exact"))
        kwargs["provider"] = EmbeddingProviderConfig.from_dict(data.get("provider", {}))
        config = cls(**kwargs)
        config.validate()
        return config
