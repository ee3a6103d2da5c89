"""Independent reference values for the Rust test suite.

Run with `python3 tools/oracles.py`; the printed numbers are frozen into
crates/core/tests/oracles.rs. Uses mpmath for the transcendental matching
conditions and scipy's LAPACK tridiagonal solver for grid spectra, so
nothing here shares code with the crate.
"""

import mpmath as mp
import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import minimize_scalar

mp.mp.dps = 40


def double_well_levels(a, u0, count, half_width=1):
    """Lowest sub-barrier levels of the boxed symmetric double well."""
    a, u0, L = mp.mpf(a), mp.mpf(u0), mp.mpf(half_width)

    def even(e):
        k, kap = mp.sqrt(2 * e), mp.sqrt(2 * (u0 - e))
        return -k * mp.cos(k * (L - a)) * mp.cosh(kap * a) - kap * mp.sinh(kap * a) * mp.sin(k * (L - a))

    def odd(e):
        k, kap = mp.sqrt(2 * e), mp.sqrt(2 * (u0 - e))
        return -k * mp.cos(k * (L - a)) * mp.sinh(kap * a) - kap * mp.cosh(kap * a) * mp.sin(k * (L - a))

    roots = []
    grid = [u0 * i / 4000 for i in range(1, 4000)]
    for f in (even, odd):
        vals = [f(e) for e in grid]
        for e0, e1, v0, v1 in zip(grid, grid[1:], vals, vals[1:]):
            if v0 * v1 < 0:
                roots.append(mp.findroot(f, (e0, e1), solver="anderson"))
    return sorted(roots)[:count]


def fd_levels(x_min, x_max, n, potential, count):
    h = (x_max - x_min) / (n - 1)
    x = x_min + h * np.arange(1, n - 1)
    d = 1.0 / h**2 + potential(x)
    e = np.full(n - 3, -0.5 / h**2)
    w = eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(0, count - 1))
    return w


def main():
    a = mp.mpf(103) / 1024
    e = double_well_levels(a, 15, 2)
    print("matched E1, E2 at a = 103/1024:", mp.nstr(e[0], 17), mp.nstr(e[1], 17))
    print("period:", mp.nstr(2 * mp.pi / (e[1] - e[0]), 17))

    def worst(av):
        lv = double_well_levels(av, 15, 2)
        return float(max(abs(lv[0] - 3.22), abs(lv[1] - 5.02)))

    res = minimize_scalar(worst, bounds=(0.09, 0.11), method="bounded", options={"xatol": 1e-12})
    print("calibrated a:", repr(res.x), "max error:", res.fun)

    for n in (2049, 4097):
        u = lambda x: np.where(np.abs(x) < float(a) - 1e-12, 15.0, np.where(np.abs(np.abs(x) - float(a)) < 1e-12, 7.5, 0.0))
        w = fd_levels(-1.0, 1.0, n, u, 2)
        print(f"FD double well n={n}:", repr(w[0]), repr(w[1]))

    w = fd_levels(-1.0, 1.0, 4097, lambda x: 0.0 * x, 4)
    print("FD free box [-1,1] n=4097:", [repr(v) for v in w])
    print("analytic box:", [float((k * mp.pi) ** 2 / 8) for k in range(1, 5)])

    dx = 1 / (4 * mp.sqrt(10))
    print("gaussian delta_x:", mp.nstr(dx, 17), "energy:", mp.nstr(mp.mpf(25) ** 2 / 2 + 1 / (8 * dx**2), 17))


if __name__ == "__main__":
    main()
