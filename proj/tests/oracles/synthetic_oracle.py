"""Declared ground-truth CDF of the rotation dataset in normalized units."""

import math

FIXTURE = "synthetic.json"


def build():
    lo_deg, hi_deg = 0.0, 120.0
    lo = math.radians(lo_deg) / math.pi
    hi = math.radians(hi_deg) / math.pi
    return {
        FIXTURE: {
            "oracle": "tests/oracles/synthetic_oracle.py",
            "rotation_uniform": {
                "provenance": "derived: U[0 deg, 120 deg] mapped through rotation = pi * r",
                "degrees": [lo_deg, hi_deg],
                "normalized_support": [lo, hi],
            },
        }
    }
