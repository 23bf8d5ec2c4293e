"""Complement, CDF, inverse-CDF and threshold-scan cases over [-1, 1]."""

from fractions import Fraction
import math

FIXTURE = "histogram.json"


def normalize(weights):
    b = len(weights)
    total = sum(Fraction(w) for w in weights)
    width = Fraction(2, b)
    return [Fraction(w) / (total * width) for w in weights]


def complement(weights):
    dens = normalize(weights)
    peak = max(dens)
    q = [peak - d for d in dens]
    if sum(q) == 0:
        return normalize([1] * len(weights))
    return normalize(q)


def cdf(weights):
    dens = normalize(weights)
    width = Fraction(2, len(weights))
    out = [Fraction(0)]
    for d in dens:
        out.append(out[-1] + d * width)
    return out


def cdf_at(weights, x):
    dens = normalize(weights)
    width = Fraction(2, len(weights))
    total = Fraction(0)
    for i, d in enumerate(dens):
        lo = -1 + i * width
        if x <= lo:
            break
        total += d * min(width, x - lo)
    return total


def inverse_by_bisection(weights, u):
    """Largest x with F(x) <= u, found by exact-arithmetic bisection."""
    lo, hi = Fraction(-1), Fraction(1)
    for _ in range(80):
        mid = (lo + hi) / 2
        if cdf_at(weights, mid) <= u:
            lo = mid
        else:
            hi = mid
    return float(lo)


def low_ranges(weights, eps):
    dens = normalize(weights)
    b = len(weights)
    peak = max(dens)
    out, start = [], None
    for i in range(b + 1):
        low = i < b and dens[i] < Fraction(eps) * peak
        if low and start is None:
            start = i
        if not low and start is not None:
            out.append([start, i - 1])
            start = None
    return [[float(Fraction(-1) + Fraction(2 * s, b)), float(Fraction(-1) + Fraction(2 * (e + 1), b))]
            for s, e in out]


def build():
    complement_cases = [
        {"name": "two equal bins and an empty one", "weights": [0.5, 0.5, 0.0]},
        {"name": "uniform", "weights": [1.0, 1.0, 1.0, 1.0]},
        {"name": "delta at bin 2", "weights": [0.0, 0.0, 1.0, 0.0, 0.0]},
        {"name": "ragged", "weights": [3.0, 1.0, 0.0, 2.0, 5.0, 1.0]},
    ]
    for c in complement_cases:
        c["expected"] = [float(v) for v in complement(c["weights"])]
    cdf_cases = [
        {"name": "uniform, 4 bins", "weights": [1.0, 1.0, 1.0, 1.0]},
        {"name": "delta at bin 2 of 4", "weights": [0.0, 0.0, 1.0, 0.0]},
        {"name": "ragged", "weights": [3.0, 1.0, 0.0, 2.0, 5.0, 1.0]},
    ]
    for c in cdf_cases:
        c["expected"] = [float(v) for v in cdf(c["weights"])]
    us = [0.0, 0.1, 0.25, 0.3, 0.5, 0.9, 0.999]
    inverse_cases = [
        {"name": "zero-mass interior bin", "weights": [1.0, 0.0, 3.0, 2.0]},
        {"name": "uniform", "weights": [1.0, 1.0, 1.0, 1.0, 1.0]},
        {"name": "leading empty bins", "weights": [0.0, 0.0, 1.0, 3.0]},
    ]
    for c in inverse_cases:
        c["u"] = us
        c["expected"] = [inverse_by_bisection(c["weights"], Fraction(u)) for u in us]
    manual_cases = [
        {"name": "threshold scan, two disjoint ranges", "weights": [1.0, 0.01, 1.0, 0.0], "eps": 0.05},
        {"name": "mass only on the negative half", "weights": [1.0, 1.0, 0.0, 0.0], "eps": 0.05},
        {"name": "uniform", "weights": [1.0, 1.0, 1.0, 1.0], "eps": 0.05},
    ]
    for c in manual_cases:
        c["expected"] = low_ranges(c["weights"], c["eps"])
    return {
        FIXTURE: {
            "oracle": "tests/oracles/histogram_oracle.py",
            "provenance": "derived: exact rational evaluation; inverse CDF by bisection on the piecewise-linear CDF",
            "complement": complement_cases,
            "cdf": cdf_cases,
            "inverse_cdf": inverse_cases,
            "manual_ranges": manual_cases,
        }
    }
