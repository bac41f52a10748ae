"""
Checking the local solvers against full enumeration
===================================================

On tiny problems every assignment of data points to elements can be tried.
The best of them is a lower bound for both local solvers.
"""

import numpy as np

from ddelastic import SolverConfig, simplified_truss
from ddelastic.dataset import generate_sigmoid
from ddelastic.experiments import compare_with_oracle
from ddelastic.structure import build_bar

cases = [
    ("bar, 3 elements, 9 points, linear strains",
     build_bar(3.0, 3, 1e-3, "left", tip_load=3e4), generate_sigmoid(1e9, 9, 0.2), 0),
    ("bar, 3 elements, 9 points, nonlinear strains",
     build_bar(3.0, 3, 1e-3, "left", tip_load=3e4), generate_sigmoid(1e9, 9, 0.2), 1),
    ("two-bar truss, 15 points",
     simplified_truss(gamma=100.0), generate_sigmoid(1e9, 15, 0.2), 1),
]
for title, st, ds, alpha in cases:
    c = compare_with_oracle(st, ds, SolverConfig(alpha=alpha))
    o = c.objectives
    print(f"{title}\n  {c.oracle.n_evaluated} assignments tried,"
          f" oracle {o['oracle']:.6g}  GO-ADM {o['go_adm']:.6g}  ADM {o['adm']:.6g}")
    print("  oracle assignment", c.oracle.best_assignment, " GO-ADM", c.go_adm.final.assignment,
          " match:", np.array_equal(c.oracle.best_assignment, c.go_adm.final.assignment))
