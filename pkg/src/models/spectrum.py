import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CSV_HEADER = ("frequency_hz", "strain_psd_1perHz")


@dataclass(frozen=True)
class Spectrum:
    """Frequency grid in Hz paired with PSD values in 1/Hz."""

    frequencies: np.ndarray
    values: np.ndarray
    unstable: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def __post_init__(self) -> None:
        frequencies = np.asarray(self.frequencies, dtype=float)
        values = np.asarray(self.values)
        if frequencies.ndim != 1 or frequencies.shape != values.shape:
            raise ValueError("frequencies and values must be 1-D of equal length")
        if np.any(np.diff(frequencies) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        unstable = np.asarray(self.unstable, dtype=bool)
        if unstable.size == 0:
            unstable = np.zeros(frequencies.shape, dtype=bool)
        object.__setattr__(self, "frequencies", frequencies)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "unstable", unstable)

    @property
    def omega(self) -> np.ndarray:
        return 2 * np.pi * self.frequencies

    def asd(self) -> np.ndarray:
        return np.sqrt(self.values)

    def covers(self, f_min: float, f_max: float) -> bool:
        return bool(self.frequencies[0] <= f_min and f_max <= self.frequencies[-1])

    @classmethod
    def from_csv(cls, path: Path) -> "Spectrum":
        with path.open(encoding="utf-8", newline="") as handle:
            rows = list(enumerate(csv.reader(handle), start=1))
        if rows and rows[0][1] and not _is_number(rows[0][1][0]):
            rows = rows[1:]
        data = []
        for line, row in rows:
            if not row:
                continue
            if len(row) < 2:
                raise ValueError(f"{path} line {line}: expected two columns")
            data.append((float(row[0]), float(row[1])))
        if not data:
            raise ValueError(f"{path} holds no noise-curve rows")
        frequencies, values = np.array(data).T
        return cls(frequencies, values)

    def to_csv(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for frequency, value in zip(self.frequencies, self.values, strict=True):
                writer.writerow((repr(float(frequency)), repr(float(value))))


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True
