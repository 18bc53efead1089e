import csv
import io
import json
import logging
import sys
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any, Literal, TextIO

import numpy as np

from .models import RunConfig
from .utils.tools import VERSION

logger = logging.getLogger(__name__)

Columns = Mapping[str, Sequence[Any] | np.ndarray]


def build_meta(
    command: str, config: RunConfig, seed: int | None = None, **extra: Any
) -> dict[str, Any]:
    meta: dict[str, Any] = {
        "version": VERSION,
        "command": command,
        "seed": seed,
        "config": config.model_dump(mode="json"),
    }
    meta.update({key: _plain(value) for key, value in extra.items()})
    return meta


def render(
    columns: Columns, meta: Mapping[str, Any], fmt: Literal["csv", "json"]
) -> str:
    table = _normalize(columns)
    if fmt == "json":
        return _dumps({"meta": dict(meta), "data": table})
    return _render_csv(table)


def render_meta(meta: Mapping[str, Any]) -> str:
    return _dumps(dict(meta))


def emit(
    columns: Columns,
    meta: Mapping[str, Any],
    fmt: Literal["csv", "json"],
    *,
    output: Path | None = None,
    meta_path: Path | None = None,
    stdout: TextIO | None = None,
) -> None:
    text = render(columns, meta, fmt)
    if output is None:
        (stdout or sys.stdout).write(text)
    else:
        _write(output, text)
        logger.info("wrote %s", output)
    if meta_path is not None:
        _write(meta_path, render_meta(meta))


def _normalize(columns: Columns) -> dict[str, list[Any]]:
    table = {name: _plain(values) for name, values in columns.items()}
    lengths = {len(values) for values in table.values()}
    if len(lengths) > 1:
        raise ValueError(f"columns differ in length: {sorted(lengths)}")
    return table


def _plain(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Mapping):
        return {key: _plain(item) for key, item in value.items()}
    if isinstance(value, list | tuple):
        return [_plain(item) for item in value]
    return value


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _render_csv(table: dict[str, list[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table)
    for row in zip(*table.values(), strict=True):
        writer.writerow([_cell(value) for value in row])
    return buffer.getvalue()


def _dumps(document: dict[str, Any]) -> str:
    return json.dumps(document, ensure_ascii=False, indent=2) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
