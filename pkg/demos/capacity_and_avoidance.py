"""Monte Carlo half-plane capacity and hull avoidance next to the exact
values from the explicit maps.

    python3 demos/capacity_and_avoidance.py
"""
import numpy as np

from brownbeads import (ExperimentConfig, Semidisk, VerticalSlit, avoid_probability,
                        estimate_caps, hull_map, run_avoidance_experiment)

for A in (VerticalSlit(0.0, 1.0), Semidisk(0.0, 1.0)):
    c0, c1 = estimate_caps(A, 20_000, stream=1, method="semicircle")
    print(f"{A.describe()}: cap1 {c1.value:.4f} +- {c1.stderr:.4f} (exact {hull_map(A).hcap():.4f}), "
          f"cap0 {c0.value:.4f} +- {c0.stderr:.4f}")
print(f"slit cap0 exact 2/pi = {2 / np.pi:.4f}, semidisk 4/pi = {4 / np.pi:.4f}")

# a short ladder so this finishes in seconds; the acceptance run uses finer dt
cfg = ExperimentConfig.default("avoid", 7, n_paths=5000, dt_ladder=[1e-3, 2.5e-4], y_max=200.0)
r = run_avoidance_experiment(cfg)
for q in r["rungs"]:
    print(f"dt={q['dt']:g}: P(avoid) = {q['p_avoid']:.4f} +- {q['stderr']:.4f}")
e = r["p_extrapolated"]
print(f"extrapolated {e['value']:.4f} +- {e['stderr']:.4f}; exact f'(0) = "
      f"{avoid_probability(Semidisk(2.0, 1.0)):.4f}")
