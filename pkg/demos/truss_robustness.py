"""
Two-bar truss with awkward data
===============================

The two-bar truss is loaded in five steps with two datasets that are
harder than a clean sigmoid curve: one with 80% of its points on the
tension side, and one with Gaussian noise (points breaking monotonicity are
put back to their clean positions).  GO-ADM never does worse than ADM.
"""

from ddelastic import SolverConfig, simplified_truss, solve_structure
from ddelastic.dataset import add_noise, check_consistency, generate_sigmoid, make_unsymmetric, repair_noisy
from ddelastic.experiments import load_steps

st = simplified_truss(gamma=100.0)
cfg = SolverConfig(alpha=1, load_factors=load_steps(5))

clean = generate_sigmoid(1e9, 87, 0.2)
noisy, reverted = repair_noisy(add_noise(clean, 0.06, seed=7), clean)
print(f"noisy dataset: {len(reverted)} of {len(clean)} points reverted, "
      f"consistent {check_consistency(noisy).consistent}")

for name, ds in (("unsymmetric 80/20", make_unsymmetric("sigmoid", 87, 0.2, 0.8, S_max=1e9)),
                 ("noisy", noisy)):
    print(f"\n{name}")
    recs = {k: solve_structure(st, ds, cfg, k) for k in ("adm", "go_adm")}
    print("  step   ADM objective   GO-ADM objective")
    for a, g in zip(recs["adm"].steps, recs["go_adm"].steps):
        print(f"  {a.step:4d} {a.objective:15.6g} {g.objective:18.6g}")
