"""Penalty, tanh-pushforward and initialization-moment reference values."""

import math

from common import normal_cdf

FIXTURE = "estimator.json"


def build():
    bins = 50
    edges = [-1.0 + 2.0 * i / bins for i in range(bins + 1)]
    # y = tanh(z), z ~ N(0, 1): P(y <= e) = Phi(atanh(e)).
    pushforward = [normal_cdf(math.atanh(e)) if abs(e) < 1.0 else (0.0 if e < 0 else 1.0) for e in edges]
    lam = 10.0
    return {
        FIXTURE: {
            "oracle": "tests/oracles/estimator_oracle.py",
            "penalty_linear_sum": {
                "provenance": "derived: D(x) = 2 sum(x) on 1-pixel images has gradient norm 2",
                "lambda": lam,
                "gradient_norm": 2.0,
                "expected": lam * (2.0 - 1.0) ** 2,
            },
            "tanh_pushforward": {
                "provenance": "derived: change of variables Phi(atanh(y))",
                "bins": bins,
                "edges": edges,
                "expected_cdf": pushforward,
            },
            "init_moments": {
                "provenance": "derived: std of U(-b, b) is b / sqrt(3) with b = 1 / sqrt(fan_in)",
                "cases": [{"fan_in": f, "expected_std": 1.0 / math.sqrt(f) / math.sqrt(3.0)} for f in (10, 128, 576)],
            },
        }
    }
