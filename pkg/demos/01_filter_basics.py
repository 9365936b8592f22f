"""
Kalman filter basics
====================

Track a target moving at roughly constant velocity from noisy position
fixes. The filter's estimate should beat the raw sensor once the velocity
state locks in.
"""

import numpy as np

from habdf import GaussianState, build_cv_model, kf_predict, kf_update

rng = np.random.default_rng(0)

# one axis, unit frame time, gentle random acceleration, sigma-5 sensor
model = build_cv_model(n_axes=1, dt=1.0, accel_var=0.05, meas_var=25.0)

# simulate the true motion the same way the model assumes it happens
frames = 200
truth = np.empty(frames)
pos, vel = 0.0, 1.2
for t in range(frames):
    accel = rng.normal(0.0, np.sqrt(0.05))
    pos += vel + 0.5 * accel
    vel += accel
    truth[t] = pos
meas = truth + rng.normal(0.0, 5.0, frames)

# start wide open: we claim to know nothing about position or speed
state = GaussianState([meas[0], 0.0], np.diag([100.0, 25.0]))

est = np.empty(frames)
var = np.empty(frames)
for t in range(frames):
    state = kf_predict(state, model)
    state, innovation, S = kf_update(state, model, [meas[t]])
    est[t] = state.mean[0]
    var[t] = state.cov[0, 0]

raw_rmse = np.sqrt(np.mean((meas[50:] - truth[50:]) ** 2))
kf_rmse = np.sqrt(np.mean((est[50:] - truth[50:]) ** 2))
print(f"raw sensor rmse (after settling): {raw_rmse:.3f}")
print(f"filtered rmse  (after settling): {kf_rmse:.3f}")
print(f"posterior position variance: start {var[0]:.2f} -> end {var[-1]:.2f}")
print(f"estimated velocity at the end: {state.mean[1]:.3f} (true ~{vel:.3f})")
