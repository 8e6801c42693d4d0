"""Independent reference values for the cell problem and the effective fitness.

Shooting on the periodic orbit with scipy (adaptive RK, tight tolerances) and a root
bracket on the seed, then adaptive quadrature for period averages. Writes
oracle_values.json next to this file.
"""
import json
import math
from pathlib import Path

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

TWO_PI = 2.0 * math.pi
RTOL, ATOL = 1e-13, 1e-14


def figure1_rate(x, s, I):
    return (2.0 + math.sin(TWO_PI * s)) * (2.0 - x * x) / (I + 0.5) - 0.5


def orbit(g):
    """Periodic orbit of dJ/ds = g(s, exp J); returns a dense solution for I(s)."""

    def shoot(alpha):
        sol = solve_ivp(lambda s, J: [g(s, math.exp(J[0]))], (0.0, 1.0), [alpha],
                        method="DOP853", rtol=RTOL, atol=ATOL)
        return sol.y[0, -1] - alpha

    alpha = brentq(shoot, -30.0, 6.0, xtol=1e-15, rtol=1e-15, maxiter=500)
    sol = solve_ivp(lambda s, J: [g(s, math.exp(J[0]))], (0.0, 1.0), [alpha],
                    method="DOP853", rtol=RTOL, atol=ATOL, dense_output=True)
    return alpha, lambda s: math.exp(sol.sol(s % 1.0)[0])


def period_mean(f):
    return quad(f, 0.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=400)[0]


def compute():
    out = {}

    # constant-coefficient sanity problem R = (2 + sin 2 pi s) - I
    seed, I = orbit(lambda s, I: 2.0 + math.sin(TWO_PI * s) - I)
    out["sine_mean"] = period_mean(I)

    fig = {}
    for x in (0.0, 0.5, 1.0, 1.3):
        seed, I = orbit(lambda s, I, x=x: figure1_rate(x, s, I))
        # averaging (I + 1/2) J' over a period gives Ibar = 4 (2 - x^2) - 1/2
        fig[f"{x}"] = {"seed": seed, "mean": period_mean(I), "I_at_0.25": I(0.25),
                       "closed_form_mean": 4.0 * (2.0 - x * x) - 0.5}
    out["figure1_orbit"] = fig

    surface = []
    for x, y in ((0.5, 0.0), (0.0, 1.0), (1.0, 0.5), (-0.7, 0.3), (0.3, 0.3)):
        _, I = orbit(lambda s, I, y=y: figure1_rate(y, s, I))
        surface.append({"x": x, "y": y,
                        "R": period_mean(lambda s: figure1_rate(x, s, I(s))),
                        "closed_form": (y * y - x * x) / (2.0 * (2.0 - y * y))})
    out["figure1_fitness"] = surface

    # fluctuation example: b = 2 - x^2, D1 = 1 + a sin, D2 = I; x* = 0, b* = 2
    fl = {}
    for a in (0.8, 0.0):
        _, I = orbit(lambda s, I, a=a: 2.0 - (1.0 + a * math.sin(TWO_PI * s)) * I)
        fl[f"{a}"] = {"rho_star": period_mean(I), "rho_av": 2.0}
    out["fluctuation"] = fl

    # separable preset at the optimum level F = 2: B and D share the factor (1 + 0.3 sin),
    # so the orbit is the constant root of 2 / (1 + I) = 0.2 (1 + I)
    _, I = orbit(lambda s, I: (1.0 + 0.3 * math.sin(TWO_PI * s)) * (2.0 / (1.0 + I) - 0.2 * (1.0 + I)))
    out["separable_level"] = {"F": 2.0, "rho_star": period_mean(I),
                              "closed_form": math.sqrt(10.0) - 1.0}

    return out


def main():
    out = compute()
    path = Path(__file__).with_name("oracle_values.json")
    path.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    print(json.dumps(out, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
