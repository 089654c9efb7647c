#!/usr/bin/env python3
"""Build the radargap extension module and exercise it end to end.

Usage: python3 python/smoke_test.py  (from anywhere; paths resolve
relative to the repository root). Exits non-zero on the first failure.
"""

import json
import os
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def build_module(dest: Path) -> None:
    env = dict(os.environ, PYO3_PYTHON=sys.executable)
    subprocess.run(["cargo", "build", "-p", "radargap-py"], cwd=ROOT, env=env, check=True)
    debug = ROOT / "target" / "debug"
    candidates = [debug / "libradargap.so", debug / "libradargap.dylib", debug / "radargap.dll"]
    src = next((p for p in candidates if p.exists()), None)
    if src is None:
        sys.exit(f"no built extension module under {debug}")
    suffix = ".pyd" if src.suffix == ".dll" else ".so"
    shutil.copy2(src, dest / f"radargap{suffix}")


def check(label: str, ok: bool) -> None:
    if not ok:
        sys.exit(f"FAIL {label}")
    print(f"ok {label}")


def approx(a: float, b: float, tol: float = 1e-9) -> bool:
    return abs(a - b) <= tol


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        build_module(Path(tmp))
        sys.path.insert(0, tmp)
        import radargap as rg

        # Point-cloud metrics on hand-checkable inputs.
        check("dpp 3-4-5 triangle", rg.dpp([(0, 0, 0)], [(3, 4, 0)]) == 5.0)
        check(
            "dpp_worst symmetric",
            rg.dpp_worst([(0, 0, 0), (2, 0, 0)], [(1, 0, 0)])
            == rg.dpp_worst([(1, 0, 0)], [(0, 0, 0), (2, 0, 0)]),
        )
        check("wasserstein half mass", approx(rg.wasserstein([(0, 0, 0)], [(0, 0, 0), (1, 0, 0)]), 0.5))
        check("wd_1d identity", rg.wd_1d([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0)
        check("wd_1d unit shift", approx(rg.wd_1d([0.0], [1.0]), 1.0))
        check("pne", rg.pne(3, 5) == 2)

        # Tracking metrics.
        check("ospa identity", rg.ospa([(0, 0), (1, 1)], [(0, 0), (1, 1)]) == 0.0)
        check("ospa one empty hits cutoff", rg.ospa([(0, 0)], []) == 5.0)
        check("ospa far point saturates", rg.ospa([(0, 0)], [(100, 0)], p=2.0, c=5.0) == 5.0)
        check("iou identical boxes", rg.iou((1, 2, 0.3, 4, 2), (1, 2, 0.3, 4, 2)) == 1.0)
        check("iou disjoint boxes", rg.iou((0, 0, 0, 2, 1), (10, 0, 0, 2, 1)) == 0.0)

        # Scenario construction.
        names = rg.scenario_names()
        check("eight scenarios listed", len(names) == 8 and "eight_s" in names)
        sc = rg.Scenario("eight_s")
        check(
            "eight_s shape",
            sc.name == "eight_s"
            and sc.num_frames == 600
            and approx(sc.dt, 0.05)
            and approx(sc.duration, 30.0),
        )
        check(
            "single target visible",
            len(sc.targets(0)) == 1 and len(sc.observations(sc.num_frames - 1)) == 1,
        )
        try:
            sc.targets(sc.num_frames)
        except IndexError:
            check("frame index guarded", True)
        else:
            sys.exit("FAIL out-of-range frame accepted")

        # Simulation determinism.
        clouds = rg.simulate(sc, "irm", seed=7)
        check("irm cloud shape", len(clouds) == 600 and all(len(c) == 8 for c in clouds))
        check("same seed, same clouds", clouds == rg.simulate(sc, "irm", seed=7))
        check(
            "different seed, different clouds",
            rg.simulate(sc, "reference", seed=7) != rg.simulate(sc, "reference", seed=8),
        )

        # Full gap evaluation.
        rep = json.loads(rg.evaluate(rg.Scenario("leading_s"), ["irm", "rtm"], seed=42))
        check("report format tag", rep["format"] == "radargap.report.v1")
        check("report model order", [m["model"] for m in rep["models"]] == ["irm", "rtm"])
        check("eleven metrics per model", all(len(m["metrics"]) == 11 for m in rep["models"]))
        check(
            "gap in unit range",
            all(0.0 <= m["gap"] <= 1.0 for m in rep["models"]),
        )

        try:
            rg.evaluate(sc, ["irm", "nope"], seed=1)
        except ValueError as e:
            check("unknown model rejected", "nope" in str(e))
        else:
            sys.exit("FAIL unknown model accepted")
        try:
            rg.evaluate(sc, ["irm"], seed=1)
        except ValueError:
            check("single model rejected", True)
        else:
            sys.exit("FAIL single model accepted")

    print("all smoke checks passed")


if __name__ == "__main__":
    main()
