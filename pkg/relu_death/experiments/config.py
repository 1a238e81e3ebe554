import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import List, Optional

from relu_death.core.network import BiasMode, DataSpec
from relu_death.errors import RejectedInputError, ResultsIOError
from relu_death.init.schemes import InitScheme


class ExperimentKind(str, Enum):
    GRID = "grid"
    CONSTANT_LB_PATH = "path"
    INIT_COMPARISON = "compare-init"
    CONV_GRID = "conv-grid"


def log_spaced(k_max: int) -> List[int]:
    values, k = [], 1
    while k <= k_max:
        values.append(k)
        k *= 2
    return values


def _is_real(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _is_positive_int(value) -> bool:
    return _is_real(value) and int(value) == value and value >= 1


@dataclass
class ExperimentConfig:
    """
    Everything that determines the numbers an experiment produces.

    Runtime knobs that cannot change results (worker threads, progress bars) are not part of it.
    """

    kind: ExperimentKind = ExperimentKind.GRID
    n_values: List[int] = field(default_factory=lambda: list(range(1, 16)))
    k_values: List[int] = field(default_factory=lambda: log_spaced(256))
    p: float = 0.5
    k_max: int = 64
    channels: List[int] = field(default_factory=lambda: [1, 2, 3, 4])
    kernels: List[int] = field(default_factory=lambda: [1, 3])
    side: int = 8
    scheme: str = "he"
    bias_mode: BiasMode = BiasMode.ZERO
    M: int = 1024
    trials: int = 1024
    base_seed: int = 0
    level: float = 0.95
    radius: Optional[float] = None
    output_dir: str = "results"

    def __post_init__(self):
        self.kind = ExperimentKind(self.kind)
        self.bias_mode = BiasMode(self.bias_mode)
        self.scheme = str(InitScheme.parse(self.scheme))

    @property
    def init_scheme(self) -> InitScheme:
        return InitScheme.parse(self.scheme)

    @property
    def data_spec(self) -> Optional[DataSpec]:
        if self.radius is None:
            return None
        return DataSpec(distribution="cluster", radius=self.radius)

    def validate(self) -> "ExperimentConfig":
        counts = {"M": self.M, "trials": self.trials, "k_max": self.k_max, "side": self.side}
        for name, values in (("n_values", self.n_values), ("k_values", self.k_values),
                             ("channels", self.channels), ("kernels", self.kernels)):
            if not isinstance(values, (list, tuple)) or not values:
                raise RejectedInputError(f"{name} must be a non-empty list, got {values!r}")
            counts.update({f"{name}[{i}]": v for i, v in enumerate(values)})
        for name, value in counts.items():
            if not _is_positive_int(value):
                raise RejectedInputError(f"{name} must be a positive integer, got {value!r}")
        for name in ("p", "level") + (("radius",) if self.radius is not None else ()):
            if not _is_real(getattr(self, name)):
                raise RejectedInputError(f"{name} must be a number, got {getattr(self, name)!r}")
        if not _is_real(self.base_seed) or int(self.base_seed) != self.base_seed or not 0 <= self.base_seed < 2**64:
            raise RejectedInputError(f"base_seed must be an unsigned 64-bit integer, got {self.base_seed!r}")
        if self.kind == ExperimentKind.CONSTANT_LB_PATH and not 0.0 < self.p < 1.0:
            raise RejectedInputError(f"p must lie in (0, 1), got {self.p}")
        if self.kind == ExperimentKind.CONV_GRID and max(self.kernels) > self.side:
            raise RejectedInputError(f"kernel side {max(self.kernels)} is larger than the image side {self.side}")
        if not 0.0 < self.level < 1.0:
            raise RejectedInputError(f"level must lie in (0, 1), got {self.level}")
        if self.radius is not None:
            if self.kind != ExperimentKind.GRID:
                raise RejectedInputError(f"radius only applies to grid experiments, not {self.kind.value}")
            if self.radius <= 0:
                raise RejectedInputError("radius must be positive")
        return self

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data["kind"] = self.kind.value
        data["bias_mode"] = self.bias_mode.value
        return data

    def fingerprint(self) -> str:
        """Hash of the fields that determine results; the output directory is excluded."""
        data = self.to_dict()
        data.pop("output_dir")
        return hashlib.sha256(json.dumps(data, sort_keys=True).encode("utf-8")).hexdigest()[:16]

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise RejectedInputError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**data)
        except (TypeError, ValueError) as e:
            raise RejectedInputError(f"invalid config: {e}")

    @staticmethod
    def read_file(path) -> dict:
        """Raw key-value pairs of a flat JSON config, or of the `config` entry of a run manifest."""
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except OSError as e:
            raise ResultsIOError(path, e)
        except json.JSONDecodeError as e:
            raise RejectedInputError(f"{path} is not valid JSON: {e}")
        if isinstance(data, dict) and isinstance(data.get("config"), dict):
            data = data["config"]
        if not isinstance(data, dict):
            raise RejectedInputError(f"{path} must hold a JSON object")
        return data

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_dict(cls.read_file(path))

    def merged(self, overrides: dict) -> "ExperimentConfig":
        """Copy with every non-None override applied."""
        values = self.to_dict()
        values.update({key: value for key, value in overrides.items() if value is not None})
        return ExperimentConfig.from_dict(values)

    @property
    def output_path(self) -> Path:
        return Path(self.output_dir)
