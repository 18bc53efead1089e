from collections.abc import Iterable
from pathlib import Path

VERSION = "0.1.0"

BASE_DIR = Path(__file__).resolve().parent.parent.parent
PRESETS_PATH = BASE_DIR / "presets.yaml"


def join_nonempty(values: Iterable[str], sep: str = ", ") -> str:
    return sep.join([v for v in values if v])
