"""
Per-sensor reliability weighting
================================

Each expert scores its own sensor: the Mahalanobis distance of each
measurement against the filter's prediction, squashed through a sigmoid
centered at a chi-square threshold. Ordinary measurements earn a small
penalty, outliers a penalty near 1.
"""

import numpy as np

from habdf import Expert, ExpertConfig, build_cv_model, chi2_xi

rng = np.random.default_rng(3)

model = build_cv_model(n_axes=1, dt=1.0, accel_var=0.02, meas_var=4.0)
xi = chi2_xi(dof=1, confidence=0.95)
print(f"threshold xi for 1 dof at 95% confidence: {xi:.4f}")

expert = Expert(model, ExpertConfig(xi=xi), init_var=100.0)

# clean random walk with three planted spikes
frames = 120
spike_at = {40, 75, 76}
truth = np.cumsum(rng.normal(0.0, 0.5, frames))
for t in range(frames):
    y = truth[t] + rng.normal(0.0, 2.0)
    if t in spike_at:
        y += 30.0  # the sensor glitches hard
    report = expert.step(np.array([y]))
    if t in spike_at or t in {39, 41, 77}:
        tag = "SPIKE" if t in spike_at else "clean"
        print(f"frame {t:3d} [{tag}]  md = {report.md:7.3f}   w_M = {report.w_M:.4f}")

print()
print("spike frames earn a penalty of ~1; the frames right after stay elevated")
print("while the filter walks back the damage, then the penalty decays again")
