"""Three quantitative checks of small-strain behavior, as scans.

Each scan returns a report with per-eps rows, a fitted rate where one makes
sense, and a pass flag; the CSV text is what the command line writes.
"""

import numpy as np

from gamma_elastica import (
    COERCIVITY_C_FROZEN,
    CoercivitySampler,
    CompactGrid,
    EpsSchedule,
    NematicModel,
    NematicWellFamily,
    coercivity_scan,
    dist_limit_scan,
    report_csv_text,
    uniform_limit_scan,
)

model = NematicModel()

# 1. uniform convergence of the rescaled densities on a compact strain grid
grid = CompactGrid.build(d=3, radius=2.0, count=128)
report = uniform_limit_scan(model, model.limit_params(), grid, EpsSchedule.geometric())
print(f"uniform limit on {len(grid)} strains: rate = {report.rate:.3f}, "
      f"passed = {report.passed}")
print(report_csv_text(report))

# 2. rescaled well distances against the limiting strain distance
E = np.array([[0.5, 0.2, 0.0], [0.2, -0.1, 0.1], [0.0, 0.1, -0.4]])
report = dist_limit_scan(E, NematicWellFamily(), EpsSchedule(values=(0.03, 0.01, 0.003, 0.001)))
print(f"well-distance limit: target = {report.targets[0]:.6f}, "
      f"relative errors = {[f'{r:.1e}' for r in report.details['relative_errors']]}")

# 3. the energy stays above the frozen coercivity floor on thousands of
#    near-well, mid-range, and far-field samples
sampler = CoercivitySampler(near=400, mid=400, far=400)
report = coercivity_scan(model, sampler, EpsSchedule(values=(0.1, 0.05, 0.02)),
                         floor=COERCIVITY_C_FROZEN)
print(f"coercivity floor {COERCIVITY_C_FROZEN}: per-eps minima = "
      f"{[round(c, 3) for c in report.c_min]}, passed = {report.passed}")
