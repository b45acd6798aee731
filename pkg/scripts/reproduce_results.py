"""Regenerate every reproduction table from the shipped configuration.

    python scripts/reproduce_results.py [outdir]

Writes CSV/JSON files through the CLI and prints a short comparison with the
quoted experimental numbers.
"""

import json
import sys
from pathlib import Path

from tpgsim.cli import main

out = Path(sys.argv[1] if len(sys.argv) > 1 else "results")
out.mkdir(parents=True, exist_ok=True)

runs = [
    ("pm_endpoint.csv", ["pm-solve", "--lambda-p-nm", "532", "--theta-deg", "90"]),
    ("pm_curve.csv", ["pm-curve", "--theta-min-deg", "75", "--theta-max-deg", "90",
                      "--theta-samples", "31"]),
    ("yield_sweep.csv", ["yield-sweep"]),
    ("flux_21uJ.json", ["flux", "--energy-uj", "21"]),
    ("flux_spectrum.csv", ["flux-spectrum", "--lobes", "5"]),
    ("synthetic_sweep.csv", ["synth-sweep", "--noise", "0.01", "--seed", "1"]),
    ("regime_map.csv", ["regime-map", "--samples", "41"]),
    ("efficiency.json", ["efficiency"]),
    ("efficiency_quoted_yield.json", ["efficiency", "--yield23", "2e4"]),
    ("oracle_report.csv", ["oracle-report", "--samples", "21"]),
]
for name, argv in runs:
    code = main(argv + ["--out", str(out / name)])
    print(f"{name:32s} exit {code}")

code = main(["fit-delta", "--data", str(out / "synthetic_sweep.csv"),
             "--out", str(out / "fit_delta.json")])
print(f"{'fit_delta.json':32s} exit {code}")

flux = json.loads((out / "flux_21uJ.json").read_text())
fit = json.loads((out / "fit_delta.json").read_text())["fit"]
eff = json.loads((out / "efficiency_quoted_yield.json").read_text())["efficiency"]
endpoint = (out / "pm_endpoint.csv").read_text().splitlines()[-1].split(",")
print()
print(f"phase matching at 90 deg : lambda1 = {float(endpoint[1]):.1f} nm, "
      f"lambda23 = {float(endpoint[2]):.1f} nm   (measured 1491 / 1654 nm)")
print(f"n2 + n3 at 21 uJ         : {flux['yield23']:.3g} per pulse   (measured ~2e4)")
print(f"delta from synthetic fit : {fit['delta']:.4g}   (generated at 2e-7)")
print(f"eta, eta/n1 at 2e4/pulse : {eff['eta']:.2g}, {eff['eta_per_n1']:.2g}   "
      f"(quoted {eff['quoted_eta']:g}, {eff['quoted_eta_per_n1']:g})")
