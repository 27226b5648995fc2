"""Write 1000 UCI 8x8 digits (100 per class) as CSV for the acceptance suite.

Uses the copy of the UCI optical digits test set that ships inside
scikit-learn (no network access).  Intensities are rescaled from 0..16 to
[0, 1].  Output columns: label, then 64 pixels in row-major order.

    python scripts/export_digits.py tests/data/digits1000.csv
"""
import sys

import numpy as np
from sklearn.datasets import load_digits


def main(out):
    data = load_digits()
    rows = []
    for c in range(10):
        idx = np.flatnonzero(data.target == c)[:100]
        rows.append(np.column_stack([data.target[idx], data.data[idx] / 16.0]))
    M = np.vstack(rows)
    header = "label," + ",".join(f"p{i}" for i in range(64))
    np.savetxt(out, M, delimiter=",", header=header, comments="", fmt="%.17g")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "digits1000.csv")
