#!/usr/bin/env python3
"""Smoke test for the fklab_py extension module.

Locates the compiled library under target/, loads it, and runs a small
pipeline: substrate coding, energy evaluation, ground-action bracket,
minimal-action table, weak KAM solutions, verification, classification
and a drift sweep. Exits nonzero on the first failure.

Build the module first:

    cargo build --release -p fklab-py
"""

import importlib.util
import json
import math
import sys
from importlib.machinery import ExtensionFileLoader
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        REPO / "target" / "release" / "libfklab_py.so",
        REPO / "target" / "debug" / "libfklab_py.so",
        REPO / "target" / "release" / "libfklab_py.dylib",
        REPO / "target" / "debug" / "libfklab_py.dylib",
    ]
    for so in candidates:
        if so.exists():
            loader = ExtensionFileLoader("fklab_py", str(so))
            spec = importlib.util.spec_from_loader("fklab_py", loader, origin=str(so))
            mod = importlib.util.module_from_spec(spec)
            loader.exec_module(mod)
            print(f"loaded {so}")
            return mod
    sys.exit("no built extension found; run `cargo build --release -p fklab-py` first")


PASSED = 0


def check(label, cond, detail=""):
    global PASSED
    if not cond:
        sys.exit(f"FAIL {label}{': ' + detail if detail else ''}")
    PASSED += 1
    print(f"pass {label}")


def main():
    fk = load_module()
    alpha = 1 / math.sqrt(5)
    rho = math.sqrt(3)

    # Substrate: binary coding with no adjacent scaled cells at small alpha.
    pts = fk.substrate_points(alpha, rho, -50, 50)
    letters = [l for (_, _, l) in pts]
    check("substrate letters are binary", set(letters) <= {0, 1})
    check(
        "no adjacent scaled cells",
        all(not (a == 1 and b == 1) for a, b in zip(letters, letters[1:])),
    )
    freq = fk.subword_frequency(alpha, rho, -500, 500, [1])
    check("letter frequency near alpha", abs(freq - alpha) < 0.01, f"freq={freq}")

    # Model energies.
    m = fk.Model("periodic", 0.02, 0.5, -6.0, 6.0)
    expect = 0.5 * (0.27 - 0.25 - 0.02) ** 2 + 0.5 * m.potential(0.25)
    check("energy decomposes into stretch and on-site parts", abs(m.energy(0.25, 0.27) - expect) < 1e-12)
    check("energy nonnegative", m.energy(-1.3, 2.4) >= 0.0)
    g = fk.Grid(-4.0, 4.0, 1 / 256)
    check("grid length", len(g) == 2049)

    # Ground action bracket around the exact degenerate level 2e-4.
    lower, estimate, upper = fk.ground_action_bracket(m, g, 32)
    check("bracket ordered", lower <= estimate <= upper)
    check("bracket contains exact level", lower <= 2e-4 <= upper, f"[{lower}, {upper}]")
    rep = json.loads(fk.nondegeneracy_report(m, g, 32))
    check("verdict degenerate", rep["verdict"] == "degenerate", rep["verdict"])

    # Minimal action table: zero self action, triangle sanity.
    values, pred = fk.mane_table(m, g, 0.0, 2e-4)
    i0 = g.index_nearest(0.0)
    check("self action zero", values[i0] == 0.0)
    v, chain = fk.mane_potential(m, g, 0.0, 1.0, 2e-4)
    check("unit advance has positive cost", v > 0.0)
    check("chain endpoints", abs(chain[0]) < 1e-9 and abs(chain[-1] - 1.0) < 1e-9)

    # Weak KAM solutions for a pinned strong-drift model.
    ms = fk.Model("periodic", 1.0, 0.1, -30.0, 30.0)
    gs = fk.Grid(-28.0, 28.0, 1 / 64)
    sols = {}
    for kind in ("I", "II", "III"):
        s = fk.build_solution(ms, gs, kind, epsilon=1, e_bar=0.0)
        sols[kind] = s
        check(f"type {kind} label", s.type_label == kind, s.type_label)
        rep = json.loads(fk.verify_solution(ms, gs, s))
        check(f"type {kind} verifies", rep["passed"], json.dumps(rep))
        cls = json.loads(fk.classify_solution(ms, gs, s, epsilon=1))
        check(f"type {kind} classifies", cls["label"] == kind, cls["label"])

    # One smoothing step leaves a solution unchanged on its interior.
    s1 = sols["I"]
    smoothed = fk.smoothing_step(ms, gs, s1.values, 0.0)
    ilo, ihi = s1.interior
    drift = max(abs(smoothed[j] - s1.values[j]) for j in range(ilo, ihi + 1))
    check("solution is a fixed point", drift < 1e-9, f"drift={drift}")

    check("distance to itself is zero", fk.solution_distance(s1, s1) == 0.0)
    check("types I and II differ", fk.solution_distance(s1, sols["II"]) > 1.0)

    # Solution JSON round-trips.
    again = fk.Solution.from_json(s1.to_json())
    check("json round-trip", again.values == s1.values and again.type_label == "I")

    # Free configuration advances monotonically under strong drift.
    points, energy = fk.fundamental_configuration(ms, gs, 6)
    check("fundamental is monotone", all(a < b for a, b in zip(points, points[1:])))

    # Drift sweep brackets the pinning transition symmetrically.
    sweep = json.loads(fk.lambda_sweep(m, [-1.0, -0.02, 0.0, 0.02, 1.0], g, n_max=16))
    verdicts = [row["verdict"] for row in sweep["rows"]]
    check(
        "sweep verdicts",
        verdicts == ["nondegenerate", "degenerate", "degenerate", "degenerate", "nondegenerate"],
        str(verdicts),
    )

    print(f"OK: {PASSED} checks passed")


if __name__ == "__main__":
    main()
