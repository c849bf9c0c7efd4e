"""Exact-rational re-derivation of the stage and race payoff matrices.

Writes tests/fixtures/race_matrices.csv. Each payoff is assembled from the
per-encounter description of the game (who pays c, what share of b is won,
found-out events) rather than from the closed matrix, and evaluated with
fractions.Fraction so the fixture carries no floating-point error.
"""
from fractions import Fraction as F
import csv
import sys

CASES = [
    # c, b, B, W, s, p_fo, p_r
    ("1", "4", "10000", "100", "3/2", "1/2", "1/2"),
    ("1", "4", "10000", "100", "3/2", "1", "1/2"),
    ("1", "4", "10000", "100", "3/2", "0", "1/2"),
    ("1", "4", "0", "100", "3/2", "1/2", "0"),
    ("1", "4", "10000", "1000000", "3/2", "3/5", "1/10"),
    ("1", "4", "10000", "1000000", "3/2", "3/5", "3/10"),
    ("1", "4", "10000", "100", "2", "1/10", "13/20"),
    ("1/2", "3", "500", "10", "5", "1/4", "9/10"),
    ("1", "4", "10000", "100", "3/2", "1/2", "1"),
]


def stage(c, b, s, pfo):
    safe_vs_safe = -c + b / 2
    # safe pays c; wins all of b if the unsafe co-player is exposed, else the slow share
    safe_vs_unsafe = -c + pfo * b + (1 - pfo) * (b * 1 / (1 + s))
    # unsafe keeps the fast share only when not exposed
    unsafe_vs_safe = (1 - pfo) * (b * s / (1 + s))
    # both unexposed: split b; only co-player exposed: all of b; self exposed: 0
    unsafe_vs_unsafe = (1 - pfo) * ((1 - pfo) * b / 2 + pfo * b)
    return safe_vs_safe, safe_vs_unsafe, unsafe_vs_safe, unsafe_vs_unsafe


def race(c, b, B, W, s, pfo, pr):
    p11, p12, p21, p22 = stage(c, b, s, pfo)
    survive = 1 - pr
    return (B / W / 2 + p11, p12, survive * (B * s / W + p21), survive * (B * s / W / 2 + p22))


def main(out):
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["c", "b", "B", "W", "s", "p_fo", "p_r",
                "stage00", "stage01", "stage10", "stage11",
                "race00", "race01", "race10", "race11"])
    for case in CASES:
        c, b, B, W, s, pfo, pr = (F(x) for x in case)
        vals = stage(c, b, s, pfo) + race(c, b, B, W, s, pfo, pr)
        w.writerow([repr(float(x)) for x in (c, b, B, W, s, pfo, pr)] + [repr(float(v)) for v in vals])


if __name__ == "__main__":
    main(sys.stdout)
