"""End-to-end checks of the cfgreject command-line tool.

Usage: test_cli.py PATH_TO_CFGREJECT
"""

import csv
import json
import os
import subprocess
import sys
import tempfile
import unittest
import xml.etree.ElementTree as ET

BINARY = None
SVG_NS = "{http://www.w3.org/2000/svg}"
SAMPLES_HEADER = [
    "index", "class", "seed", "asd_full", "asd_partial", "terminated_early", "x0", "x1",
    "true_log_density", "avg_knn", "lof", "steps_completed", "nfe",
]
# Small and quick: every test overrides these unless it is about them.
FAST = ["--steps", "12", "--tau", "4", "--threads", "2"]


def run(*args, check=True):
    proc = subprocess.run([BINARY, *map(str, args)], capture_output=True, text=True)
    if check and proc.returncode != 0:
        raise AssertionError(f"{args} exited {proc.returncode}: {proc.stderr}")
    return proc


def read_rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def read_bytes(path):
    with open(path, "rb") as f:
        return f.read()


def svg_markers(path):
    root = ET.parse(path).getroot()
    assert root.tag == SVG_NS + "svg"
    return root.iter(SVG_NS + "circle")


class CliTest(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = self._tmp.name

    def tearDown(self):
        self._tmp.cleanup()

    def path(self, *parts):
        return os.path.join(self.tmp, *parts)

    def write_config(self, doc):
        path = self.path("config.json")
        with open(path, "w") as f:
            json.dump(doc, f)
        return path

    def test_help_and_bad_usage(self):
        self.assertEqual(run("--help").returncode, 0)
        self.assertEqual(run(check=False).returncode, 1)
        self.assertEqual(run("run", "--no-such-flag", check=False).returncode, 1)
        self.assertEqual(run("sample", "--solver", "rk4", check=False).returncode, 1)

    def test_config_errors_exit_1_with_field_name(self):
        cfg = self.write_config({"policy": {"tau": 40}})
        proc = run("run", "--config", cfg, "--out", self.path("o"), check=False)
        self.assertEqual(proc.returncode, 1)
        self.assertIn("policy.tau", proc.stderr)

        cfg = self.write_config({"polcy": {}})
        proc = run("run", "--config", cfg, check=False)
        self.assertEqual(proc.returncode, 1)
        self.assertIn("polcy: unknown field", proc.stderr)

    def test_runtime_errors_exit_2(self):
        bogus = self.path("not_samples.csv")
        with open(bogus, "w") as f:
            f.write("a,b\n1,2\n")
        proc = run("density", "--input", bogus, "--out", self.path("o"), check=False)
        self.assertEqual(proc.returncode, 2)

    def test_build_dist(self):
        run("build-dist", "--out", self.path("d"))
        with open(self.path("d", "mixture.json")) as f:
            doc = json.load(f)
        self.assertEqual(len(doc["classes"]), 2)
        self.assertEqual(sum(len(c["components"]) for c in doc["classes"]), 2 * 1016)

    def test_flags_override_config(self):
        cfg = self.write_config({"schedule": {"steps": 20}, "num_samples": 3, "master_seed": 5})
        run("sample", "--config", cfg, "--steps", "8", "--tau", "2", "--out", self.path("s"))
        rows = read_rows(self.path("s", "omega_2", "samples.csv"))
        self.assertEqual(len(rows), 6)
        self.assertEqual({r["steps_completed"] for r in rows}, {"8"})

    def test_sample_density_analyze_plot(self):
        run("sample", "--samples", "40", *FAST, "--out", self.path("s"))
        samples = self.path("s", "omega_2", "samples.csv")
        ledgers = read_rows(self.path("s", "omega_2", "ledgers.csv"))
        self.assertEqual(len(ledgers), 80 * 12)

        run("density", "--input", samples, "--out", self.path("d"))
        scored = read_rows(self.path("d", "samples.csv"))
        self.assertTrue(all(r["avg_knn"] and r["lof"] for r in scored))

        run("analyze", "--input", self.path("d", "samples.csv"), *FAST, "--samples", "40",
            "--out", self.path("a"))
        with open(self.path("a", "summary.json")) as f:
            summary = json.load(f)
        for key in ("spearman_asd_logdensity", "fit_slope", "fit_r2", "nfe_saved_fraction"):
            self.assertIn(key, summary)
        self.assertEqual(len(read_rows(self.path("a", "budget.csv"))), 4)

        run("plot", "--input", self.path("a", "curve.csv"), "--out", self.path("p"))
        run("plot", "--input", samples, "--out", self.path("p"))
        self.assertEqual(len(list(svg_markers(self.path("p", "scatter.svg")))), 80)
        self.assertGreater(len(list(svg_markers(self.path("p", "curve.svg")))), 1)

    def test_filter_keeps_four_of_twenty(self):
        run("sample", "--samples", "10", "--steps", "32", "--out", self.path("s"))
        run("filter", "--input", self.path("s", "omega_2", "samples.csv"), "--tau", "10",
            "--keep", "0.2", "--out", self.path("f"))
        with open(self.path("f", "omega_2", "filter.json")) as f:
            report = json.load(f)
        self.assertEqual(report["candidates"], 20)
        self.assertEqual(report["accepted"], 4)
        rows = read_rows(self.path("f", "omega_2", "samples.csv"))
        early = [r for r in rows if r["terminated_early"] == "1"]
        self.assertEqual(len(early), 16)
        for r in early:
            self.assertEqual((r["x0"], r["x1"], r["true_log_density"], r["asd_full"]),
                             ("", "", "", ""))
            self.assertEqual(r["steps_completed"], "11")
        self.assertLess(report["total_nfe"], report["full_batch_nfe"])

    def test_streaming_filter(self):
        run("filter", "--mode", "streaming", "--samples", "30", *FAST, "--out",
            self.path("f"))
        with open(self.path("f", "omega_2", "filter.json")) as f:
            report = json.load(f)
        self.assertEqual(report["mode"], "streaming")
        self.assertEqual(report["candidates"], 60)
        for c in report["classes"]:
            self.assertGreaterEqual(c["gamma"], 0.0)

        run("filter", "--mode", "streaming", "--gamma", "0", "--samples", "5", *FAST,
            "--out", self.path("g"))
        with open(self.path("g", "omega_2", "filter.json")) as f:
            self.assertEqual(json.load(f)["accepted"], 10)

    def test_guidance_sweep_writes_four_output_sets(self):
        run("run", "--guidance", "2", "--guidance", "2.5", "--guidance", "3", "--guidance",
            "3.5", "--samples", "64", *FAST, "--out", self.path("r"))
        expected = {"samples.csv", "curve.csv", "ranks.csv", "budget.csv", "summary.json",
                    "scatter.svg", "curve.svg"}
        for name in ("omega_2", "omega_2.5", "omega_3", "omega_3.5"):
            self.assertTrue(expected <= set(os.listdir(self.path("r", name))), name)
            header = read_bytes(self.path("r", name, "samples.csv")).decode().split("\n")[0]
            self.assertEqual(header.split(","), SAMPLES_HEADER)
            for svg in ("scatter.svg", "curve.svg"):
                text = read_bytes(self.path("r", name, svg)).decode()
                self.assertNotIn("href", text)
                ET.fromstring(text)
        with open(self.path("r", "summary.json")) as f:
            top = json.load(f)
        self.assertEqual([r["omega"] for r in top["runs"]], [2, 2.5, 3, 3.5])

    def test_single_sample_run(self):
        run("run", "--samples", "1", *FAST, "--out", self.path("r"))
        out = self.path("r", "omega_2")
        self.assertEqual(len(read_rows(os.path.join(out, "samples.csv"))), 2)
        with open(os.path.join(out, "summary.json")) as f:
            summary = json.load(f)
        self.assertIsNone(summary["spearman_asd_logdensity"])
        self.assertIsNone(summary["fit_slope"])
        for svg in ("scatter.svg", "curve.svg"):
            ET.parse(os.path.join(out, svg))

    def test_plot_single_row_curve(self):
        curve = self.path("curve.csv")
        with open(curve, "w") as f:
            f.write("bin,asd_lo,asd_hi,count,mean_asd,mean_log_density\n0,0,1,3,0.5,-1.25\n")
        run("plot", "--input", curve, "--out", self.path("p"))
        self.assertEqual(len(list(svg_markers(self.path("p", "curve.svg")))), 1)

    def test_reruns_are_byte_identical(self):
        outputs = []
        for threads in ("1", "3"):
            out = self.path("t" + threads)
            run("run", "--samples", "48", "--steps", "12", "--tau", "4", "--threads", threads,
                "--seed", "11", "--out", out)
            files = {}
            for root, _, names in os.walk(out):
                for n in names:
                    if n.endswith((".csv", ".json", ".svg")):
                        p = os.path.join(root, n)
                        files[os.path.relpath(p, out)] = read_bytes(p)
            outputs.append(files)
        self.assertEqual(outputs[0], outputs[1])


if __name__ == "__main__":
    BINARY = os.path.abspath(sys.argv.pop(1))
    unittest.main(verbosity=2)
