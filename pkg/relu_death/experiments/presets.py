import json
import os
from pathlib import Path

from relu_death.errors import RejectedInputError, ResultsIOError
from relu_death.experiments.config import ExperimentConfig, ExperimentKind

current_dir = os.path.dirname(os.path.abspath(__file__))
DEFAULT_ROOT_DIR = os.path.join(os.path.dirname(current_dir), "presets")


class PresetLoader:
    """Named experiment presets stored as flat JSON files, one per experiment setting."""

    def __init__(self, root_dir=DEFAULT_ROOT_DIR):
        self.root_dir = root_dir
        self.preset_files = {path.stem: path for path in sorted(Path(self.root_dir).glob("*.json"))}

    def load_json(self, file_path):
        try:
            with open(file_path, "r", encoding="utf-8") as f:
                return json.load(f)
        except OSError as e:
            raise ResultsIOError(file_path, e)

    def names(self):
        return list(self.preset_files)

    def load(self, name: str) -> dict:
        if name not in self.preset_files:
            raise RejectedInputError(f"unknown preset '{name}', available: {', '.join(self.names())}")
        return self.load_json(self.preset_files[name])

    def config(self, name) -> ExperimentConfig:
        """Config for a preset; a bare experiment kind selects the preset of the same name."""
        if isinstance(name, ExperimentKind):
            name = name.value
        return ExperimentConfig.from_dict(self.load(name))
