"""Independent oracles for derived reference values.

Run with ``python3 tests/oracles/generate.py``; the results are frozen into
``frozen.json`` and read by the test-suite. Uses sympy/mpmath only, none of
the package code.
"""

import json
from pathlib import Path

import mpmath as mp
import sympy as sy

mp.mp.dps = 50
out = {}

r, e = sy.symbols("r epsilon", positive=True)
kernels = {"imq": 1 / sy.sqrt(1 + (e * r) ** 2), "gaussian": sy.exp(-(e * r) ** 2)}


def radial_laplacian(phi, dim):
    return sy.diff(phi, r, 2) + (dim - 1) / r * sy.diff(phi, r)


out["kernel_imq_eps1_r1"] = float(kernels["imq"].subs({e: 1, r: 1}).evalf(30))

lap0 = {}
for name, phi in kernels.items():
    for dim in (1, 2):
        # dim * phi''(0) is the r -> 0 limit of the radial Laplacian
        val = sy.limit(radial_laplacian(phi, dim).subs(e, 1), r, 0)
        lap0[f"{name}_dim{dim}"] = float(val)
out["laplacian_r0_eps1"] = lap0

lap = {}
for name, phi in kernels.items():
    for dim in (1, 2):
        for eps in (0.5, 1.0, 3.0):
            lap[f"{name}_dim{dim}_eps{eps}"] = float(
                radial_laplacian(phi, dim).subs({e: sy.Rational(str(eps)), r: sy.Rational("0.37")}).evalf(30))
out["laplacian_r037"] = lap


def imq(eps, d):
    return 1 / mp.sqrt(1 + (eps * d) ** 2)


# cardinal row for nodes {0, 1/2, 1}, IMQ eps=2, query 1/4, by explicit inverse
nodes = [mp.mpf(0), mp.mpf(1) / 2, mp.mpf(1)]
B = mp.matrix(4, 4)
for i, xi in enumerate(nodes):
    for j, xj in enumerate(nodes):
        B[i, j] = imq(2, abs(xi - xj))
    B[i, 3] = 1
    B[3, i] = 1
q = mp.matrix([[imq(2, abs(mp.mpf(1) / 4 - x)) for x in nodes] + [1]])
row = q * B ** -1
out["cardinal_row_3nodes"] = [float(row[0, k]) for k in range(3)]

# two-point system {0, 1}, IMQ eps=1
out["two_point_offdiag"] = float(imq(1, 1))

# Hardy / Franke closed forms
out["hardy_11_equidistant"] = float(1 / (mp.mpf("0.815") * mp.mpf("0.1")))
out["hardy_2_points"] = float(1 / mp.mpf("0.815"))
out["franke_11_equidistant"] = float(mp.mpf("0.8") * mp.sqrt(11))


# quadratic-IC heat series by high-precision summation
def quad_series(x, t, terms=200000):
    x, t = mp.mpf(x), mp.mpf(t)
    s = mp.mpf(0)
    for n in range(1, terms, 2):
        s += 8 / (n**3 * mp.pi**3) * mp.sin(n * mp.pi * x) * mp.exp(-(n * mp.pi) ** 2 * t)
    return s


mp.mp.dps = 30
out["heat_quad_x05_t0"] = float(quad_series("0.5", 0, terms=20001))
out["heat_quad_x05_t0001"] = float(quad_series("0.5", "0.001", terms=401))
out["heat_quad_x03_t01"] = float(quad_series("0.3", "0.1", terms=101))

# cost function at the knots (natural log)
out["cost_at_1e13"] = float(mp.log(mp.mpf(10) ** 13 + 1))

path = Path(__file__).with_name("frozen.json")
path.write_text(json.dumps(out, indent=1, sort_keys=True) + "\n")
print(json.dumps(out, indent=1, sort_keys=True))
