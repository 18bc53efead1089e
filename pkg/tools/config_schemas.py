from __future__ import annotations

import json
from pathlib import Path

from src.models import (
    DetectorConfig,
    EosFit,
    FilterCavity,
    FrequencyGrid,
    PopulationModel,
    ReadoutConfig,
    RunConfig,
)

CONFIG_MODELS = {
    "detector": DetectorConfig,
    "eos": EosFit,
    "filter_cavity": FilterCavity,
    "frequency_grid": FrequencyGrid,
    "population": PopulationModel,
    "readout": ReadoutConfig,
    "run": RunConfig,
}


def export_config_schemas(output_dir: Path) -> list[Path]:
    output_dir.mkdir(parents=True, exist_ok=True)
    exported: list[Path] = []

    for name, model in CONFIG_MODELS.items():
        schema = model.model_json_schema()
        path = output_dir / f"{name}.schema.json"
        path.write_text(
            json.dumps(schema, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        exported.append(path)

    return exported
