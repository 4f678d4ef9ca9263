"""Ground-truth summary for the bundled synthetic dataset.

Computed with numpy, independently of the Rust code, and written next to the
CSV. Quantiles use numpy's default linear rule.
"""
import csv
import json
import pathlib

import numpy as np

ASSETS = pathlib.Path(__file__).resolve().parent.parent / "crates" / "core" / "assets"
LEVELS = [0.10, 0.20, 0.25, 0.50, 0.75, 0.80, 0.90]
THRESHOLDS = [1.0, 1.4, 2.0, 3.0]


def summary(values):
    v = np.asarray(values, dtype=float)
    q = {p: float(np.quantile(v, p)) for p in LEVELS}
    return {
        "n": int(v.size),
        "mean": float(np.mean(v)),
        "median": float(np.quantile(v, 0.5)),
        "iqr": float(np.quantile(v, 0.75) - np.quantile(v, 0.25)),
        "quantiles": [{"p": p, "value": q[p]} for p in LEVELS],
        "share_over_1": float(np.count_nonzero(v > 1.0) / v.size),
        "share_breaking": [
            {"threshold": t, "share": float(np.count_nonzero(v >= t) / v.size)} for t in THRESHOLDS
        ],
    }


def main():
    with open(ASSETS / "synthetic-dams.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    cost = [float(r["act_cost"]) / float(r["est_cost"]) for r in rows]
    schedule = [float(r["act_months"]) / float(r["est_months"]) for r in rows]
    truth = {
        "thresholds": THRESHOLDS,
        "cost": summary(cost),
        "schedule": summary(schedule),
    }
    with open(ASSETS / "synthetic-dams.truth.json", "w") as f:
        json.dump(truth, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
