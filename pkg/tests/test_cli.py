import json
import math
import os
import sys
import tempfile
import unittest

import yaml
from click.testing import CliRunner

# Add project root to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from main import cli
from src.writers import CELLS_HEADER, GAPS_HEADER


def parse_values(output):
    values = {}
    for line in output.splitlines():
        if "=" in line:
            name, value = line.split("=", 1)
            try:
                values[name] = float(value)
            except ValueError:
                values[name] = value
    return values


class TestLocateCommands(unittest.TestCase):
    def setUp(self):
        self.runner = CliRunner()

    def test_angles_2d(self):
        result = self.runner.invoke(cli, ["locate", "angles", "--d", "25", "--point", "0,25"])
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn("alpha1=0.785398163", result.output)
        values = parse_values(result.output)
        self.assertAlmostEqual(values["alpha2"], 3 * math.pi / 4, places=8)

    def test_angles_3d(self):
        result = self.runner.invoke(cli, ["locate", "angles", "--point=70,240,-65"])
        self.assertEqual(result.exit_code, 0, result.output)
        values = parse_values(result.output)
        r1 = math.sqrt(95.0 ** 2 + 240.0 ** 2 + 65.0 ** 2)
        self.assertEqual(sorted(values), ["alpha1", "alpha2", "beta1", "beta2", "gamma1", "gamma2"])
        self.assertAlmostEqual(values["gamma1"], math.acos(-65.0 / r1), places=8)

    def test_point_from_angles(self):
        result = self.runner.invoke(cli, ["locate", "point", "--d", "25",
                                          "--alpha1", "0.785398163", "--alpha2", "2.356194490"])
        self.assertEqual(result.exit_code, 0, result.output)
        x, y = (float(v) for v in result.output.strip().split(","))
        self.assertAlmostEqual(x, 0.0, places=5)
        self.assertAlmostEqual(y, 25.0, places=5)

    def test_point_from_angles_3d(self):
        angles = self.runner.invoke(cli, ["locate", "angles", "--point=-30,150,40"])
        values = parse_values(angles.output)
        args = ["locate", "point"]
        for name in ("alpha1", "beta1", "gamma1", "alpha2", "beta2", "gamma2"):
            args += [f"--{name}", repr(values[name])]
        result = self.runner.invoke(cli, args)
        self.assertEqual(result.exit_code, 0, result.output)
        point = [float(v) for v in result.output.strip().split(",")]
        for actual, expected in zip(point, (-30.0, 150.0, 40.0)):
            self.assertAlmostEqual(actual, expected, places=5)

    def test_geometry_errors_exit_2(self):
        result = self.runner.invoke(cli, ["locate", "angles", "--point", "0,-5"])
        self.assertEqual(result.exit_code, 2)
        result = self.runner.invoke(cli, ["locate", "point", "--alpha1", "1.0", "--alpha2", "1.0"])
        self.assertEqual(result.exit_code, 2)

    def test_malformed_arguments_exit_1(self):
        result = self.runner.invoke(cli, ["locate", "angles", "--point", "abc"])
        self.assertEqual(result.exit_code, 1)
        result = self.runner.invoke(cli, ["locate", "point", "--alpha1", "0.5", "--alpha2", "2.0",
                                          "--beta1", "1.0"])
        self.assertEqual(result.exit_code, 1)
        result = self.runner.invoke(cli, ["locate", "point", "--alpha1", "0", "--alpha2", "2.0"])
        self.assertEqual(result.exit_code, 1)


class TestErrorCommand(unittest.TestCase):
    def setUp(self):
        self.runner = CliRunner()

    def invoke_json(self, args):
        result = self.runner.invoke(cli, ["error"] + args)
        self.assertEqual(result.exit_code, 0, result.output)
        return json.loads(result.output)

    def test_movement_along_x(self):
        report = self.invoke_json(["--d", "25", "--point", "70,240", "--disp", "0.01,0",
                                   "--conv", "midpoint"])
        self.assertAlmostEqual(report["error_magnitude_cm"], 0.05001, places=5)
        self.assertEqual(report["true_point_cm"], [70.0, 240.0])

    def test_zero_displacement(self):
        report = self.invoke_json(["--d", "25", "--point", "0,100", "--disp", "0,0"])
        self.assertLess(report["error_magnitude_cm"], 1e-9)

    def test_motion_and_skew(self):
        report = self.invoke_json(["--d", "25", "--point=-70,90", "--motion", "0,10,0",
                                   "--dt", "0.001", "--conv", "midpoint"])
        self.assertAlmostEqual(report["displacement_cm"][0], 0.0, places=12)
        self.assertAlmostEqual(report["displacement_cm"][1], 0.01, places=12)
        self.assertAlmostEqual(report["error_magnitude_cm"], 0.016921, places=5)

    def test_spatial_report(self):
        report = self.invoke_json(["--point", "0,240,50", "--disp", "0,0.01,0"])
        self.assertEqual(report["mode"], "3d")
        self.assertIn("skew_line_gap_cm", report)

    def test_output_is_repeatable(self):
        args = ["error", "--point", "70,240", "--disp", "0.01,0"]
        self.assertEqual(self.runner.invoke(cli, args).output, self.runner.invoke(cli, args).output)

    def test_usage_errors(self):
        self.assertEqual(self.runner.invoke(cli, ["error", "--point", "70,240"]).exit_code, 1)
        self.assertEqual(self.runner.invoke(cli, ["error", "--point", "70,240", "--disp", "0.01,0",
                                                  "--motion", "1,0", "--dt", "0.01"]).exit_code, 1)
        self.assertEqual(self.runner.invoke(cli, ["error", "--point", "70,240",
                                                  "--motion", "1,0"]).exit_code, 1)
        self.assertEqual(self.runner.invoke(cli, ["error", "--point", "70,240",
                                                  "--disp", "0,0,0.01"]).exit_code, 1)

    def test_marker_behind_baseline(self):
        result = self.runner.invoke(cli, ["error", "--point", "0,1", "--disp", "0,-2"])
        self.assertEqual(result.exit_code, 2)


class TestSweepCommands(unittest.TestCase):
    def setUp(self):
        self.runner = CliRunner()
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def path(self, name):
        return os.path.join(self.tmp.name, name)

    def write_config(self, outputs=None, **overrides):
        document = {
            "rig": {"d_cm": 25.0},
            "range": {"x": {"min": 60.0, "max": 70.0}, "y": {"min": 230.0, "max": 240.0},
                      "step_cm": 5.0},
            "displacement": {"dx_cm": 0.01, "dy_cm": 0.0, "dz_cm": 0.0},
            "convention": "midpoint",
            "mode": "2d",
            "outputs": outputs if outputs is not None else [
                {"kind": "cells", "path": self.path("out/cells.csv")},
                {"kind": "summary", "path": self.path("out/summary.json")},
                {"kind": "heatmap", "path": self.path("out/heatmap.svg")},
            ],
        }
        document.update(overrides)
        path = self.path("run.yaml")
        with open(path, 'w') as f:
            yaml.safe_dump(document, f)
        return path

    def read(self, name):
        with open(self.path(name)) as f:
            return f.read()

    def test_sweep_writes_outputs(self):
        result = self.runner.invoke(cli, ["sweep", self.write_config()])
        self.assertEqual(result.exit_code, 0, result.output)
        cells = self.read("out/cells.csv").splitlines()
        self.assertEqual(cells[0], CELLS_HEADER)
        self.assertEqual(len(cells), 10)
        summary = json.loads(self.read("out/summary.json"))
        self.assertAlmostEqual(summary["max_error_cm"], 0.05001, places=5)
        self.assertEqual(summary["argmax_points_cm"], [[70.0, 240.0, 0.0]])
        self.assertEqual(summary["cell_count"], 9)
        self.assertEqual(summary["config"]["rig"]["d_cm"], 25.0)
        self.assertIn("<svg", self.read("out/heatmap.svg"))

    def test_sweep_is_byte_identical(self):
        config = self.write_config()
        self.runner.invoke(cli, ["sweep", config])
        first = (self.read("out/cells.csv"), self.read("out/summary.json"))
        self.runner.invoke(cli, ["sweep", config, "--workers", "2"])
        self.assertEqual(first[0], self.read("out/cells.csv"))
        second_summary = json.loads(self.read("out/summary.json"))
        self.assertEqual(second_summary["config"]["workers"], 2)
        second_summary["config"]["workers"] = 1
        self.assertEqual(json.loads(first[1]), second_summary)
        self.runner.invoke(cli, ["sweep", config])
        self.assertEqual(first, (self.read("out/cells.csv"), self.read("out/summary.json")))

    def test_sweep_single_cell(self):
        config = self.write_config(range={"x": {"min": 10.0, "max": 10.0},
                                          "y": {"min": 120.0, "max": 120.0}})
        result = self.runner.invoke(cli, ["sweep", config])
        self.assertEqual(result.exit_code, 0, result.output)
        cells = self.read("out/cells.csv").splitlines()
        self.assertEqual(len(cells), 2)
        summary = json.loads(self.read("out/summary.json"))
        self.assertEqual(summary["max_error_cm"], summary["min_error_cm"])

    def test_overrides(self):
        config = self.write_config(outputs=[{"kind": "summary", "path": self.path("s.json")}])
        result = self.runner.invoke(cli, ["sweep", config, "--d", "12.5", "--disp", "0.02,0"])
        self.assertEqual(result.exit_code, 0, result.output)
        summary = json.loads(self.read("s.json"))
        self.assertEqual(summary["config"]["rig"]["d_cm"], 12.5)
        self.assertEqual(summary["config"]["resolved_displacement_cm"], [0.02, 0.0, 0.0])

    def test_missing_config(self):
        result = self.runner.invoke(cli, ["sweep", self.path("absent.yaml")])
        self.assertEqual(result.exit_code, 1)

    def test_geometry_failure_leaves_no_outputs(self):
        config = self.write_config(displacement={"dx_cm": 0.0, "dy_cm": -500.0, "dz_cm": 0.0})
        result = self.runner.invoke(cli, ["sweep", config])
        self.assertEqual(result.exit_code, 2)
        self.assertFalse(os.path.exists(self.path("out/cells.csv")))
        self.assertFalse(os.path.exists(self.path("out/summary.json")))

    def test_approx_check_passes(self):
        table = self.path("gaps.csv")
        result = self.runner.invoke(cli, ["approx-check", self.write_config(outputs=[]),
                                          "--disp", "0.01,0", "--table", table])
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertLess(parse_values(result.output)["worst_gap"], 0.01)
        with open(table) as f:
            self.assertEqual(f.readline().strip(), GAPS_HEADER)

    def test_approx_check_fails_for_large_displacement(self):
        result = self.runner.invoke(cli, ["approx-check", self.write_config(outputs=[]),
                                          "--disp", "1.0,0,0"])
        self.assertEqual(result.exit_code, 3)

    def test_approx_check_rejects_zero_displacement(self):
        result = self.runner.invoke(cli, ["approx-check", self.write_config(outputs=[]),
                                          "--disp", "0,0,0"])
        self.assertEqual(result.exit_code, 1)

    def test_report_regenerates_outputs(self):
        config = self.write_config()
        self.runner.invoke(cli, ["sweep", config])
        original = json.loads(self.read("out/summary.json"))
        result = self.runner.invoke(cli, ["report", self.path("out/cells.csv"), "--config", config,
                                          "--summary", self.path("again.json"),
                                          "--heatmap", self.path("again.svg"), "--plane", "x,y",
                                          "--width", "400", "--height", "300"])
        self.assertEqual(result.exit_code, 0, result.output)
        regenerated = json.loads(self.read("again.json"))
        self.assertEqual(regenerated["max_error_cm"], original["max_error_cm"])
        self.assertEqual(regenerated["argmax_points_cm"], original["argmax_points_cm"])
        self.assertAlmostEqual(regenerated["max_approx_vs_exact_gap"],
                               original["max_approx_vs_exact_gap"], delta=1e-7)
        self.assertIn("<svg", self.read("again.svg"))

    def test_report_without_config(self):
        self.runner.invoke(cli, ["sweep", self.write_config()])
        result = self.runner.invoke(cli, ["report", self.path("out/cells.csv"),
                                          "--summary", self.path("plain.json")])
        self.assertEqual(result.exit_code, 0, result.output)
        summary = json.loads(self.read("plain.json"))
        self.assertIsNone(summary["magnification"])
        self.assertIsNone(summary["max_approx_vs_exact_gap"])
        self.assertNotIn("config", summary)

    def test_report_gap_matches_sweep_for_both_conventions(self):
        for convention, displacement in (("midpoint", [0.0, 0.01, 0.0]),
                                         ("basepoint", [0.01, 0.0, 0.0])):
            with self.subTest(convention=convention):
                config = self.write_config(
                    convention=convention,
                    displacement=dict(zip(("dx_cm", "dy_cm", "dz_cm"), displacement)))
                self.runner.invoke(cli, ["sweep", config])
                original = json.loads(self.read("out/summary.json"))
                result = self.runner.invoke(cli, ["report", self.path("out/cells.csv"),
                                                  "--config", config,
                                                  "--summary", self.path("again.json")])
                self.assertEqual(result.exit_code, 0, result.output)
                regenerated = json.loads(self.read("again.json"))
                self.assertAlmostEqual(regenerated["max_approx_vs_exact_gap"],
                                       original["max_approx_vs_exact_gap"], delta=1e-7)

    def test_motion_override(self):
        config = self.write_config(outputs=[{"kind": "summary", "path": self.path("s.json")}])
        result = self.runner.invoke(cli, ["sweep", config, "--motion", "40,0", "--dt", "0.00025"])
        self.assertEqual(result.exit_code, 0, result.output)
        summary = json.loads(self.read("s.json"))
        resolved = summary["config"]["resolved_displacement_cm"]
        self.assertAlmostEqual(resolved[0], 0.01, places=12)
        self.assertEqual(resolved[1:], [0.0, 0.0])

    def test_conflicting_overrides(self):
        config = self.write_config(outputs=[])
        for extra in (["--motion", "40,0"], ["--dt", "0.001"],
                      ["--disp", "0.01,0", "--motion", "40,0", "--dt", "0.001"]):
            with self.subTest(extra=extra):
                result = self.runner.invoke(cli, ["sweep", config] + extra)
                self.assertEqual(result.exit_code, 1, result.output)


if __name__ == '__main__':
    unittest.main()
