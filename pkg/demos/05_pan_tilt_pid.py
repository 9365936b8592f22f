"""
Pan axis under PID
==================

The camera pan axis behaves like an integrator driven by a rate command.
A positional PID with anti-windup holds the axis on target through a step
disturbance (someone bumps the mount).
"""

import numpy as np

from habdf import PidGains, run_pan_loop

gains = PidGains(kp=35.0, ki=3.4, kd=8.0, dt=0.05, integral_limit=50.0)
frames = 1500

angle = run_pan_loop(gains, frames, setpoint=0.0, disturbance=5.0, disturb_at=10)

peak = np.abs(angle).max()
band = 0.02 * 5.0 * gains.dt  # 2% of the raw per-step disturbance kick
settled = frames
for t in range(frames - 1, -1, -1):
    if abs(angle[t]) > band:
        settled = t + 1
        break

print(f"disturbance of 5 units switched on at frame 10")
print(f"peak deviation: {peak:.4f}")
print(f"back inside the {band:.4f} band for good after frame {settled}")
print(f"final offset: {angle[-1]:+.6f}")
print()

# step command: drive the axis to a new angle
step = run_pan_loop(gains, 600, setpoint=1.0)
rise = int(np.argmax(step >= 0.9))
print(f"unit step response reaches 90% at frame {rise} ({rise * gains.dt:.2f} s)")
print(f"value at the end: {step[-1]:.4f}")
