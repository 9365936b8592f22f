"""
Softened majority voting
========================

Three detectors report bounding boxes. Two agree, one wanders away. Each
detector's penalty w_d grows with the distance to its nearest peer through
a shifted tanh, so the wanderer is penalized smoothly, not cut off.
"""

import numpy as np

from habdf import BoundingBox, VoteConfig, consensus_distance, vote_weight

cfg = VoteConfig(omega0=1.0, omega=10.0, lam=40.0)
print(f"weights range ({cfg.omega0}, {cfg.omega0 + 2 * cfg.omega}), onset at {cfg.lam} px")
print()
print("frame   drift   w_d(A)   w_d(B)   w_d(C)")

rng = np.random.default_rng(7)
for frame in range(0, 101, 10):
    drift = 1.5 * frame  # detector C slides right 1.5 px per frame
    jitter = rng.normal(0.0, 1.0, (3, 2))
    boxes = [
        BoundingBox(100 + jitter[0, 0], 80 + jitter[0, 1], 50, 30),
        BoundingBox(101 + jitter[1, 0], 79 + jitter[1, 1], 50, 30),
        BoundingBox(100 + drift + jitter[2, 0], 80 + jitter[2, 1], 50, 30),
    ]
    w = [vote_weight(consensus_distance(boxes, i), cfg) for i in range(3)]
    print(f"{frame:5d}  {drift:6.1f}  {w[0]:7.3f}  {w[1]:7.3f}  {w[2]:7.3f}")

print()
print("A and B keep each other honest; C's penalty saturates once its")
print("nearest peer is far past the onset distance")
