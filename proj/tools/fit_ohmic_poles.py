#!/usr/bin/env python3
"""Fit a positive-weight exponential sum to the zero-temperature BCF of the
Ohmic spectral density J(w) = w^3/wc^2 exp(-w/wc).

    C(t) = int_0^inf J(w) exp(-i w t) dw = 6 wc^2 / (1 + i wc t)^4
         ~ sum_mu w_mu exp(i omega_mu t),  w_mu > 0, Im(omega_mu) > 0

Positive weights keep the fitted correlation a valid (positive-definite)
covariance for noise synthesis. The fit is done once for wc = 1; other
cutoffs follow from C_wc(t) = wc^2 C_1(wc t), i.e. w -> wc^2 w and
omega -> wc omega.

Frequencies are optimised by nonlinear least squares; for each trial set of
frequencies the weights come from a non-negative linear solve.

Prints a JSON pole list in the experiment-config format.
"""
import argparse
import json

import numpy as np
from scipy.optimize import least_squares, nnls


def bcf(t, wc=1.0):
    return 6.0 * wc**2 / (1.0 + 1j * wc * t) ** 4


def design(om, t):
    return np.exp(1j * t[:, None] * om[None, :])


def weights_for(om, t, target, weight):
    a = design(om, t) * weight[:, None]
    b = target * weight
    a_r = np.vstack([a.real, a.imag])
    b_r = np.concatenate([b.real, b.imag])
    w, _ = nnls(a_r, b_r)
    return w, a_r @ w - b_r


def unpack(p, k):
    return p[:k] + 1j * np.exp(p[k:])


def fit(k, t_max, n_t, seed, restarts):
    t = np.linspace(0.0, t_max, n_t)
    target = bcf(t)
    weight = 1.0 / (1.0 + 0.2 * t)

    def resid(p):
        return weights_for(unpack(p, k), t, target, weight)[1]

    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        p0 = np.concatenate([-rng.uniform(0.0, 8.0, k),
                             np.log(rng.uniform(0.05, 4.0, k))])
        sol = least_squares(resid, p0, method="trf", max_nfev=3000)
        if best is None or sol.cost < best.cost:
            best = sol
    om = unpack(best.x, k)
    w, _ = weights_for(om, t, target, weight)
    keep = w > 0
    om, w = om[keep], w[keep]
    err = np.max(np.abs(design(om, t) @ w - target))
    return w, om, err


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--poles", type=int, default=7)
    ap.add_argument("--tmax", type=float, default=12.0)
    ap.add_argument("--wc", type=float, nargs="*", default=[1.0])
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--restarts", type=int, default=8)
    args = ap.parse_args()

    w, om, err = fit(args.poles, args.tmax, 600, args.seed, args.restarts)
    order = np.argsort(om.imag)
    out = {"max_abs_error": float(err), "fits": []}
    for wc in args.wc:
        poles = []
        for i in order:
            g = np.sqrt(w[i]) * wc
            poles.append({"g": [[float(g), 0.0]],
                          "omega": [float(wc * om[i].real), float(wc * om[i].imag)]})
        out["fits"].append({"omega_c": wc, "poles": poles})
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
