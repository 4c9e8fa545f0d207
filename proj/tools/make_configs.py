#!/usr/bin/env python3
"""Writes the experiment configs in configs/.

The Ohmic pole table is the wc = 1 output of fit_ohmic_poles.py; other
cutoffs are rescaled exactly (|g|^2 -> wc^2 |g|^2, omega -> wc omega).
"""
import json
import math
import pathlib

OHMIC = [
    (0.7033208065340086, complex(-1.7149311406467296, 0.33009717075962425)),
    (1.1761974734737273, complex(-2.4915317939543065, 0.4096522312442604)),
    (1.5055866216721188, complex(-3.344159705896218, 0.5229144877502777)),
    (1.6548207660039183, complex(-4.396270137702742, 0.7187808837954222)),
    (1.452888527403569, complex(-5.902430159260128, 1.141508560216525)),
]

PSI1 = [[math.sqrt(3) / 2 * math.cos(-math.pi / 4), math.sqrt(3) / 2 * math.sin(-math.pi / 4)],
        [0.5 * math.cos(math.pi / 4), 0.5 * math.sin(math.pi / 4)]]


def kron_state(a, b):
    out = []
    for x in a:
        for y in b:
            xr, xi = x
            yr, yi = y
            out.append([xr * yr - xi * yi, xr * yi + xi * yr])
    return out


def ohmic_poles(wc=1.0, channels=1, channel=None):
    poles = []
    for w, om in OHMIC:
        g = wc * math.sqrt(w)
        amps = [[0.0, 0.0] for _ in range(channels)]
        targets = range(channels) if channel is None else [channel]
        for c in targets:
            amps[c] = [g, 0.0]
        poles.append({"g": amps, "omega": [wc * om.real, wc * om.imag]})
    return poles


def single_qubit(name, lam2, delta, dt, T, N, wc=1.0, seed=1):
    return {
        "model": {"n": 1, "hamiltonian": f"{-delta / 2} Z", "couplings": ["X"], "lambda2": lam2},
        "bath": {"convention": "plus", "poles": ohmic_poles(wc)},
        "run": {"T": T, "dt": dt, "dt_f": dt / 4, "N_r": N, "seed": seed, "mode": "both",
                "initial_state": PSI1,
                "observables": [{"name": "O_x", "op": "X"}, {"name": "O_y", "op": "Y"}, {"name": "O_z", "op": "Z"}]},
        "output": {"directory": f"out/{name}", "formats": ["csv", "json"]},
    }


def two_qubit(name, lam2, delta, dt, T, N, seed=1):
    poles = ohmic_poles(1.0, 2, 0) + ohmic_poles(1.0, 2, 1)
    return {
        "model": {"n": 2, "hamiltonian": f"{delta / 2} ZI + {delta / 2} IZ", "couplings": ["XI", "IX"], "lambda2": lam2},
        "bath": {"convention": "plus", "poles": poles},
        "run": {"T": T, "dt": dt, "dt_f": dt / 4, "N_r": N, "seed": seed, "mode": "both",
                "initial_state": kron_state(PSI1, PSI1),
                "observables": [{"name": "O_x", "op": "0.5 XI + 0.5 IX"},
                                {"name": "O_y", "op": "0.5 YI + 0.5 IY"},
                                {"name": "O_z", "op": "0.5 ZI + 0.5 IZ"}]},
        "output": {"directory": f"out/{name}", "formats": ["csv", "json"]},
    }


def main():
    root = pathlib.Path(__file__).resolve().parent.parent / "configs"
    root.mkdir(exist_ok=True)
    cfgs = {
        "dephasing": {
            "model": {"n": 1, "hamiltonian": [], "couplings": ["Z"], "lambda2": 0.01},
            "bath": {"poles": [{"g": [[1.0, 0.0]], "omega": [0.0, 1.0]}]},
            "run": {"T": 5.0, "dt": 0.1, "N_r": 10000, "seed": 7, "initial_state": "+",
                    "observables": {"X": "X", "Y": "Y"}},
            "output": {"directory": "out/dephasing"},
        },
        "spin_boson_weak": single_qubit("spin_boson_weak", 0.01, 2.0, 0.1, 5.0, 10000),
        "spin_boson_strong": single_qubit("spin_boson_strong", 0.81, 8.0, 0.025, 1.0, 10000),
        "spin_boson_wc2": single_qubit("spin_boson_wc2", 0.81, 8.0, 0.025, 1.0, 10000, wc=2.0),
        "two_qubit_weak": two_qubit("two_qubit_weak", 0.01, 2.0, 0.1, 5.0, 100000),
        "two_qubit_strong": two_qubit("two_qubit_strong", 0.81, 8.0, 0.025, 1.0, 10000),
    }
    sweep = single_qubit("ohmic_sweep", 0.81, 8.0, 0.025, 1.0, 1)
    sweep["sweep"] = {"cutoffs": [{"omega_c": wc, "poles": ohmic_poles(wc)} for wc in (1.0, 1.5, 2.0, 2.5, 3.0)]}
    cfgs["ohmic_sweep"] = sweep
    family = single_qubit("single_pole_sweep", 0.25, 2.0, 0.1, 1.0, 1)
    family["bath"] = {"poles": [{"g": [[1.0, 0.0]], "omega": [0.0, 1.0]}]}
    family["sweep"] = {"cutoffs": [{"omega_c": wc, "single_pole_scale": 1.0} for wc in (0.5, 1.0, 1.5, 2.0)]}
    cfgs["single_pole_sweep"] = family
    for name, cfg in cfgs.items():
        (root / f"{name}.json").write_text(json.dumps(cfg, indent=2) + "\n")


if __name__ == "__main__":
    main()
