"""Writes data/synthetic_magnetization.csv: a damped two-frequency oscillation on 51 points in [1, 10]."""

import math
import pathlib

def magnetization(x: float) -> float:
    return math.exp(-0.15 * x) * (0.6 * math.cos(1.3 * x) + 0.3 * math.sin(2.9 * x + 0.4)) + 0.1

def main() -> None:
    out = pathlib.Path(__file__).resolve().parent.parent / "data" / "synthetic_magnetization.csv"
    rows = ["x,f"]
    for i in range(51):
        x = 1.0 + 9.0 * i / 50
        rows.append(f"{x!r},{magnetization(x)!r}")
    out.write_text("\n".join(rows) + "\n")

if __name__ == "__main__":
    main()
