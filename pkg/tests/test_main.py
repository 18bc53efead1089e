import csv
import json
import math
import tempfile
import unittest
from pathlib import Path
from unittest import mock

import numpy as np

from main import EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC, EXIT_OK, main
from src import budget, twomode
from src.models import Spectrum

SMALL_STUDY = """
preset = baseline_gwo
samples = 40
realizations = 5
band_points = 201
n_points = 200
"""


class CommandLineTest(unittest.TestCase):
    def setUp(self) -> None:
        self._temporary_dir = tempfile.TemporaryDirectory()
        self.root = Path(self._temporary_dir.name)

    def tearDown(self) -> None:
        self._temporary_dir.cleanup()

    def write_config(self, text: str, name: str = "run.cfg") -> Path:
        path = self.root / name
        path.write_text(text, encoding="utf-8")
        return path

    def run_cli(self, *argv: str) -> int:
        return main([*argv, "--no-progress"])

    def test_bandwidth_on_baseline_preset(self) -> None:
        output = self.root / "bandwidth.json"

        code = self.run_cli(
            "bandwidth", "--preset", "baseline_gwo", "--format", "json",
            "--output", str(output),
        )  # fmt: skip
        document = json.loads(output.read_text(encoding="utf-8"))

        self.assertEqual(code, EXIT_OK)
        self.assertEqual(document["meta"]["command"], "bandwidth")
        self.assertAlmostEqual(document["meta"]["gamma_baseline_hz"], 477.1, delta=0.5)
        data = document["data"]
        self.assertEqual(data["chi_over_gamma"], [0.0, 0.5, 0.9, 0.99])
        self.assertTrue(math.isclose(data["half_power_hz"][0], 477.1, rel_tol=0.01))

    def test_csv_and_json_carry_identical_numbers(self) -> None:
        config = self.write_config("preset = baseline_gwo\nn_points = 25\n")
        csv_path = self.root / "spectrum.csv"
        json_path = self.root / "spectrum.json"

        for path, fmt in ((csv_path, "csv"), (json_path, "json")):
            code = self.run_cli(
                "spectrum", "--config", str(config), "--model", "twomode",
                "--chi-over-gamma", "0.9", "--format", fmt, "--output", str(path),
            )  # fmt: skip
            self.assertEqual(code, EXIT_OK)

        with csv_path.open(encoding="utf-8", newline="") as handle:
            rows = list(csv.DictReader(handle))
        data = json.loads(json_path.read_text(encoding="utf-8"))["data"]

        self.assertEqual(list(rows[0]), ["frequency_hz", "strain_psd", "unstable"])
        self.assertEqual([float(row["strain_psd"]) for row in rows], data["strain_psd"])
        self.assertEqual(
            [float(row["frequency_hz"]) for row in rows], data["frequency_hz"]
        )
        self.assertEqual({row["unstable"] for row in rows}, {"false"})

    def test_asd_flag_renames_the_column(self) -> None:
        output = self.root / "asd.csv"

        code = self.run_cli(
            "spectrum", "--preset", "baseline_gwo", "--model", "twomode", "--asd",
            "--output", str(output),
        )  # fmt: skip

        self.assertEqual(code, EXIT_OK)
        header = output.read_text(encoding="utf-8").splitlines()[0]
        self.assertEqual(header, "frequency_hz,strain_asd,unstable")

    def test_meta_file_echoes_resolved_config(self) -> None:
        output = self.root / "qcrb.csv"
        meta = self.root / "qcrb.meta.json"

        code = self.run_cli(
            "qcrb", "--preset", "adv_ligo", "--output", str(output),
            "--meta", str(meta),
        )  # fmt: skip
        document = json.loads(meta.read_text(encoding="utf-8"))

        self.assertEqual(code, EXIT_OK)
        self.assertEqual(document["config"]["detector"]["mass"], 40.0)
        self.assertEqual(document["config"]["preset"], "adv_ligo")
        self.assertIn("version", document)

    def test_montecarlo_is_reproducible_across_workers(self) -> None:
        config = self.write_config(SMALL_STUDY)
        outputs = []
        for workers in ("1", "3"):
            path = self.root / f"mc-{workers}.json"
            code = self.run_cli(
                "montecarlo", "--config", str(config), "--seed", "42",
                "--workers", workers, "--format", "json", "--output", str(path),
            )  # fmt: skip
            self.assertEqual(code, EXIT_OK)
            outputs.append(json.loads(path.read_text(encoding="utf-8")))

        first, second = outputs
        self.assertEqual(first["data"], second["data"])
        self.assertEqual(first["meta"]["histogram"], second["meta"]["histogram"])
        self.assertEqual(first["meta"]["seed"], 42)
        self.assertEqual(len(first["data"]["loudest_snr"]), 5)

    def test_montecarlo_repeated_runs_are_byte_identical(self) -> None:
        config = self.write_config(SMALL_STUDY)
        texts = []
        for index in range(2):
            path = self.root / f"repeat-{index}.csv"
            code = self.run_cli(
                "montecarlo", "--config", str(config), "--seed", "42",
                "--output", str(path),
            )  # fmt: skip
            self.assertEqual(code, EXIT_OK)
            texts.append(path.read_bytes())

        self.assertEqual(texts[0], texts[1])

    def test_montecarlo_without_seed_records_one(self) -> None:
        config = self.write_config(SMALL_STUDY)
        meta = self.root / "mc.meta.json"

        code = self.run_cli(
            "montecarlo", "--config", str(config), "--output",
            str(self.root / "mc.csv"), "--meta", str(meta),
        )  # fmt: skip

        self.assertEqual(code, EXIT_OK)
        self.assertIsInstance(json.loads(meta.read_text())["seed"], int)

    def test_montecarlo_reads_noise_curve(self) -> None:
        curve = self.root / "curve.csv"
        Spectrum(np.array([10.0, 10000.0]), np.array([1e-48, 1e-48])).to_csv(curve)
        config = self.write_config(SMALL_STUDY)
        output = self.root / "mc.json"

        code = self.run_cli(
            "montecarlo", "--config", str(config), "--seed", "1",
            "--noise-curve", str(curve), "--format", "json", "--output", str(output),
        )  # fmt: skip

        self.assertEqual(code, EXIT_OK)
        meta = json.loads(output.read_text(encoding="utf-8"))["meta"]
        self.assertEqual(meta["noise_curve"], str(curve))

    def test_budget_columns(self) -> None:
        output = self.root / "budget.csv"

        code = self.run_cli(
            "budget", "--preset", "baseline_gwo", "--output", str(output),
        )  # fmt: skip

        self.assertEqual(code, EXIT_OK)
        header = output.read_text(encoding="utf-8").splitlines()[0].split(",")
        self.assertEqual(header[:2], ["frequency_hz", "total"])
        self.assertIn("readout_loss", header)

    def test_sweep_marks_one_optimum_per_loss(self) -> None:
        config = self.write_config(
            "preset = baseline_gwo\nloss_grid = 0, 0.05\ngain_grid = 0, 0.5\n"
            "f_min = 500\nf_max = 5000\nn_points = 100\n"
        )
        output = self.root / "sweep.json"

        code = self.run_cli(
            "sweep", "--config", str(config), "--format", "json",
            "--output", str(output),
        )  # fmt: skip

        self.assertEqual(code, EXIT_OK)
        data = json.loads(output.read_text(encoding="utf-8"))["data"]
        self.assertEqual(len(data["total_loss"]), 4)
        self.assertEqual(sum(data["optimal"]), 2)

    def test_schemas_subcommand(self) -> None:
        code = self.run_cli("schemas", str(self.root / "schemas"))

        self.assertEqual(code, EXIT_OK)
        schema = json.loads(
            (self.root / "schemas" / "detector.schema.json").read_text()
        )
        self.assertIn("t_itm", schema["properties"])

    def test_configuration_errors_exit_2(self) -> None:
        empty = self.write_config("")
        unknown = self.write_config("preset = baseline_gwo\ncolour = red\n", "x.cfg")

        self.assertEqual(self.run_cli("spectrum", "--config", str(empty)), EXIT_CONFIG)
        self.assertEqual(
            self.run_cli("spectrum", "--config", str(unknown)), EXIT_CONFIG
        )

    def test_signal_blind_readout_exits_3(self) -> None:
        config = self.write_config("preset = baseline_gwo\nse_loss = 1\n")

        code = self.run_cli("spectrum", "--config", str(config))

        self.assertEqual(code, EXIT_NUMERIC)

    def test_short_noise_curve_row_exits_2(self) -> None:
        curve = self.root / "short.csv"
        curve.write_text("frequency_hz,strain_psd_1perHz\n1000\n", encoding="utf-8")
        config = self.write_config(SMALL_STUDY)

        code = self.run_cli(
            "montecarlo", "--config", str(config), "--seed", "1",
            "--noise-curve", str(curve),
        )  # fmt: skip

        self.assertEqual(code, EXIT_CONFIG)

    def test_undefined_values_exit_3_for_every_spectrum_command(self) -> None:
        def undefined(cfg, chi, omega):
            return np.full(np.shape(omega), np.nan)

        def undefined_budget(cfg, readout, grid):
            frequencies = grid.frequencies()
            total = np.full(frequencies.shape, np.nan)
            return budget.NoiseBudget(frequencies, total, {"readout_loss": total})

        def undefined_benefit(*args, **kwargs):
            nan = np.full((1, 2), np.nan)
            return budget.BenefitMap(
                np.array([0.0]), np.array([0.0, 0.5]), nan, nan[:, 0], nan[:, 0]
            )

        patches = {
            "qcrb": mock.patch.object(twomode, "qcrb_psd", undefined),
            "budget": mock.patch.object(budget, "decompose", undefined_budget),
            "sweep": mock.patch.object(budget, "benefit_map", undefined_benefit),
        }
        for command, patch in patches.items():
            with self.subTest(command=command), patch:
                output = self.root / f"{command}.csv"
                code = self.run_cli(
                    command, "--preset", "baseline_gwo", "--output", str(output)
                )
                self.assertEqual(code, EXIT_NUMERIC)
                self.assertFalse(output.exists())

    def test_io_failures_exit_4(self) -> None:
        missing = self.root / "missing.csv"
        config = self.write_config(SMALL_STUDY)

        code = self.run_cli(
            "montecarlo", "--config", str(config), "--seed", "1",
            "--noise-curve", str(missing),
        )  # fmt: skip
        self.assertEqual(code, EXIT_IO)

        with mock.patch.object(Path, "write_text", side_effect=PermissionError):
            code = self.run_cli(
                "bandwidth", "--preset", "baseline_gwo",
                "--output", str(self.root / "out.csv"),
            )  # fmt: skip
        self.assertEqual(code, EXIT_IO)


if __name__ == "__main__":
    unittest.main()
