"""End-to-end subsample tuning on a CSV dataset via the command line.

Generates a synthetic regression dataset, writes it to CSV, and invokes
the `subridge tune` entry point to pick the subsample size by GCV. The
selected model is then compared on a holdout set against full-data
ridgeless least squares.

Run:
    python3 demos/tune_on_csv.py
"""

import csv
import json
import tempfile
from pathlib import Path

from subridge import cli, generate_ar1


def write_csv(path, X, y):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        p = X.shape[1]
        writer.writerow([f"x{j}" for j in range(p)] + ["y"])
        for i in range(X.shape[0]):
            writer.writerow([repr(float(v)) for v in X[i]]
                            + [repr(float(y[i]))])


def main():
    data, _ = generate_ar1(n=800, p=120, rho_ar1=0.25, sigma2=1.0, seed=42)

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        csv_path = tmp / "data.csv"
        write_csv(csv_path, data.X, data.y)

        rc = cli.main([
            "tune",
            "--data", str(csv_path),
            "--target", "y",
            "--M", "50",
            "--holdout", "0.25",
            "--seed", "7",
            "--out-dir", str(tmp),
        ])
        assert rc == 0

        result = json.loads((tmp / "tune_result.json").read_text())

    print(f"selected subsample size: k = {result['k_hat']}")
    print(f"GCV at selected k:       {result['gcv_at_k_hat']:.4f}")
    print(f"holdout MSE (ensemble):  {result['holdout_mse']:.4f}")
    print(f"holdout MSE (baseline):  {result['baseline_holdout_mse']:.4f}")


if __name__ == "__main__":
    main()
