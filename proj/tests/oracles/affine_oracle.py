"""Affine matrices composed from explicit 2x2 factors, and grid shifts."""

import math

from common import matmul, rng, uniform_list

FIXTURE = "affine.json"


def compose(params):
    s_n, r_n, tx, ty, hx_n, hy_n = params
    s = 2.0 ** s_n
    theta = math.pi * r_n
    hx, hy = 0.5 * hx_n, 0.5 * hy_n
    rot = [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
    shear = [[1.0, hx], [hy, 1.0]]
    scale = [[s, 0.0], [0.0, s]]
    lin = matmul(matmul(rot, shear), scale)
    # A translation of 0.5 t of the extent spans t in [-1, 1] coordinates.
    return [[lin[0][0], lin[0][1], tx], [lin[1][0], lin[1][1], ty]]


def build():
    r = rng(23)
    cases = []
    for i in range(8):
        p = uniform_list(r, 6)
        cases.append({"name": "random %d" % i, "params": p, "expected": compose(p)})
    w = 5
    shift = 2.0 / (w - 1)
    return {
        FIXTURE: {
            "oracle": "tests/oracles/affine_oracle.py",
            "composition": {
                "provenance": "derived: product of rotation, shear and scale factor matrices",
                "cases": cases,
            },
            "grid_shift": {
                "provenance": "derived: one pixel is 2/(W-1) in [-1, 1] coordinates",
                "size": w,
                "a13": shift,
                "expected_shift_pixels": 1.0,
            },
        }
    }
