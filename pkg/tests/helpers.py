import copy
import itertools
import math

import numpy as np

from spde_mkv.transport import cost_power

BASE_CONFIG = {
    "model": {"eigenvalues": [1.0]},
    "coefficients": {"kind": "mean_field_ou", "kappa": 1.0, "b": [0.5]},
    "grid": {"T": 1.0, "M": 64},
    "initial": {"mean": [1.0], "std": [1.0]},
    "N_list": [4, 8, 16, 32, 64],
    "M_ref": 64,
    "p": 2.0,
    "p_circ": 1.0,
    "p_prime": 5.0,
    "alpha": 0.25,
    "repetitions": 20,
    "seed": 0,
    "picard": {"max_iter": 20, "tol": 0.01, "common_random_numbers": True},
}


def config_doc(**overrides):
    doc = copy.deepcopy(BASE_CONFIG)
    for key, value in overrides.items():
        doc[key] = value
    return doc


def brute_force(a, b, p, dist):
    """Minimum over all permutations; shares only the elementwise power with the code under test."""
    n = len(a)
    cost = [[float(cost_power(dist(a[i], b[j]), p)) for j in range(n)] for i in range(n)]
    best = math.inf
    for perm in itertools.permutations(range(n)):
        best = min(best, math.fsum(cost[i][perm[i]] for i in range(n)))
    return (best / n) ** (1.0 / p)


def euclid(x, y):
    return float(np.sqrt(np.sum((x - y) * (x - y))))


def sup_path(x, y):
    return float(np.max(np.sqrt(np.sum((x - y) * (x - y), axis=-1))))


ACCEPTANCE = []


def verdict(number, ok, detail):
    """Print and record one acceptance line; returns ``ok`` for assertion."""
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok
