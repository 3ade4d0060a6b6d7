"""Spreading from a compact datum and convergence to the Wulff disk.

Runs the bundled scenario through the harness and prints the rescaled
Hausdorff series, the window fits along the ray and the cone-condition margin.
Reports land in ./demo-out/<scenario>/.
"""

import os

from frontlab.harness import Scenario, run_scenario

here = os.path.dirname(os.path.abspath(__file__))
s = Scenario.load(os.path.join(here, "scenarios", "homog_bistable_compact.ini"))
bundle = run_scenario(s, "demo-out")
for row in bundle.series["hausdorff"]:
    print(f"t={row['t']:5.1f}  d_H={row['d_H']:.4f}")
for row in bundle.series["omega"]:
    print(f"t={row['t']:5.1f}  window at x={row['x']:.2f}: {row['class']} (residual {row['residual']:.3f})")
print("cones:", bundle.summary["cones"])
print("skipped:", bundle.skipped or "none")
print("artifacts:", *bundle.artifacts, sep="\n  ")
