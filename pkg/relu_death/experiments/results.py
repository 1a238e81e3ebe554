import json
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd
from loguru import logger

from relu_death.errors import ResultsIOError
from relu_death.experiments.config import ExperimentConfig, ExperimentKind

FLOAT_FORMAT = "%.10g"

COLUMNS = {
    ExperimentKind.GRID: ["n", "k", "trials", "alive", "phat", "ci_lo", "ci_hi", "lower", "upper"],
    ExperimentKind.CONSTANT_LB_PATH: [
        "k", "n", "trials", "alive", "phat", "ci_lo", "ci_hi", "lower", "upper",
        "normalized_variance", "sigma_partial_sum", "mean_sq_sigma", "e2_frequency",
    ],
    ExperimentKind.INIT_COMPARISON: [
        "n", "k", "trials",
        "iid_mean", "iid_stderr", "iid_min", "iid_alive",
        "flip_mean", "flip_stderr", "flip_min", "flip_alive",
        "center_mean", "center_stderr", "center_min", "center_alive",
        "lower", "floor", "flip_degenerate",
    ],
    ExperimentKind.CONV_GRID: [
        "channels", "kernel", "side", "k", "trials", "alive", "phat", "ci_lo", "ci_hi", "lower", "upper",
    ],
}


def now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_atomic(path: Path, text: str):
    """Write through a temporary file in the same directory, then rename over `path`."""
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        handle, temp_path = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
        with os.fdopen(handle, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(temp_path, path)
    except OSError as e:
        logger.error(f"failed to write {path}: {e}")
        raise ResultsIOError(path, e)


def table_csv(rows: List[dict], columns: List[str]) -> str:
    frame = pd.DataFrame(rows, columns=columns)
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: List[dict]
    manifest: dict
    csv_path: Optional[Path] = None
    manifest_path: Optional[Path] = None

    @property
    def columns(self) -> List[str]:
        return COLUMNS[self.config.kind]

    def table(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=self.columns)

    def to_csv(self) -> str:
        return table_csv(self.rows, self.columns)


@dataclass
class ResultStore:
    """
    On-disk state of one experiment run.

    Layout under `output_dir`:
        <kind>.csv              the result table, rewritten after every cell
        <kind>.manifest.json    config echo, cell seed streams, version and completion times
        cells/<kind>/<key>.json one marker per finished cell, used to resume
    """

    config: ExperimentConfig
    manifest: Dict = field(default_factory=dict)

    @property
    def root(self) -> Path:
        return self.config.output_path

    @property
    def csv_path(self) -> Path:
        return self.root / f"{self.config.kind.value}.csv"

    @property
    def manifest_path(self) -> Path:
        return self.root / f"{self.config.kind.value}.manifest.json"

    def cell_path(self, key: str) -> Path:
        return self.root / "cells" / self.config.kind.value / f"{key.replace('/', '_')}.json"

    def prepare(self, version: str):
        try:
            (self.root / "cells" / self.config.kind.value).mkdir(parents=True, exist_ok=True)
        except OSError as e:
            logger.error(f"cannot create output directory {self.root}: {e}")
            raise ResultsIOError(self.root, e)
        self.manifest = {
            "artifact": "relu-death",
            "version": version,
            "config": self.config.to_dict(),
            "base_seed": self.config.base_seed,
            "fingerprint": self.config.fingerprint(),
            "started": now(),
            "cells": {},
        }

    def load_cell(self, key: str) -> Optional[dict]:
        path = self.cell_path(key)
        if not path.exists():
            return None
        try:
            with open(path, "r", encoding="utf-8") as f:
                marker = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            logger.warning(f"ignoring unreadable cell marker {path}: {e}")
            return None
        if marker.get("fingerprint") != self.config.fingerprint():
            logger.warning(f"cell marker {path} belongs to a different config, recomputing")
            return None
        return marker

    def save_cell(self, key: str, stream: str, row: dict) -> dict:
        marker = {"fingerprint": self.config.fingerprint(), "stream": stream, "completed": now(), "row": row}
        write_atomic(self.cell_path(key), json.dumps(marker, indent=2) + "\n")
        return marker

    def record(self, key: str, marker: dict):
        self.manifest["cells"][key] = {"stream": marker["stream"], "completed": marker["completed"]}

    def write_table(self, rows: List[dict]):
        write_atomic(self.csv_path, table_csv(rows, COLUMNS[self.config.kind]))

    def write_manifest(self, finished: bool = False):
        if finished:
            self.manifest["finished"] = now()
        write_atomic(self.manifest_path, json.dumps(self.manifest, indent=2) + "\n")
