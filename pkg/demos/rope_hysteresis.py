"""
Cyclic rope test
================

A 17 m rope is loaded, unloaded and reloaded.  Each branch of the test gets
its own dataset, so the response on unloading differs from loading and the
load-deflection curve encloses an area.  Later branches start from where the
previous one stopped.
"""

from ddelastic.experiments import rope_phase_ranges, run_rope, synthetic_rope_columns

cols = synthetic_rope_columns()
res = run_rope(cols, rope_phase_ranges())

for p in res.phases:
    f = p.record.final
    print(f"{p.name:16s} points {len(p.dataset):3d}  steps {len(p.record.steps):3d}"
          f"  tip {p.tip_displacement[0]:.4f} -> {p.tip_displacement[-1]:.4f} m"
          f"  warm start {p.warm_started}  consistent {p.results_consistent}"
          f"  final objective {f.objective:.4g}")

d, F, k = res.load_deflection()
print(f"\nloop area (unloading + reloading) {res.loop_area():.1f} N m")
print("residual deflection after unloading:", d[k == 1][-1], "m")
