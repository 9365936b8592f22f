"""Softened majority voting over detector outputs.

Detectors vote through geometry alone: a detector whose box sits far from
every peer is the odd one out. The consensus distance is each detector's
nearest-peer distance, pushed through a shifted tanh so the penalty turns on
around ``lam`` and saturates instead of exploding. Like the expert weight,
``w_d`` is a penalty: larger means more isolated, hence less trusted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError, InsufficientDetectorsError

__all__ = [
    "BoundingBox",
    "VoteConfig",
    "box_distance",
    "consensus_distance",
    "vote_weight",
]


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box: center (u, v), height h, width w, in pixels."""

    u: float
    v: float
    h: float
    w: float

    def __post_init__(self):
        vals = (self.u, self.v, self.h, self.w)
        if not all(np.isfinite(x) for x in vals):
            raise ContractViolationError(f"box fields must be finite, got {vals}")
        if self.h < 0 or self.w < 0:
            raise ContractViolationError(f"box sides must be >= 0, got h={self.h} w={self.w}")

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v, self.h, self.w], dtype=float)

    def __array__(self, dtype=None, copy=None):
        a = self.as_array()
        return a.astype(dtype) if dtype is not None else a


def _vector(x, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ContractViolationError(f"{name} must be a nonempty vector")
    if not np.all(np.isfinite(a)):
        raise ContractViolationError(f"{name} contains non-finite entries")
    return a


def box_distance(p, r, scale=None) -> float:
    """Euclidean distance between two boxes over (u, v, h, w).

    Centers and sizes mix in raw pixels by design; pass ``scale`` (a
    positive 4-vector of divisors) to normalize dimensions, off by default.
    """
    a = _vector(p, "p")
    b = _vector(r, "r")
    if a.shape != b.shape:
        raise ContractViolationError(f"mismatched box shapes {a.shape} vs {b.shape}")
    d = a - b
    if scale is not None:
        s = _vector(scale, "scale")
        if s.shape != d.shape or np.any(s <= 0):
            raise ContractViolationError("scale must be positive and match the boxes")
        d = d / s
    return float(np.linalg.norm(d))


def consensus_distance(boxes, i: int, scale=None) -> float:
    """Distance from box ``i`` to its nearest peer among ``boxes``.

    Majority voting needs at least 3 detectors; fewer raises
    InsufficientDetectorsError.
    """
    n = len(boxes)
    if n < 3:
        raise InsufficientDetectorsError(
            f"majority voting needs at least 3 detectors, got {n}"
        )
    if not (0 <= i < n):
        raise ContractViolationError(f"index {i} out of range for {n} boxes")
    return min(box_distance(boxes[i], boxes[j], scale) for j in range(n) if j != i)


@dataclass(frozen=True)
class VoteConfig:
    """Vote-penalty shape: floor omega0, half-range omega, onset distance lam."""

    omega0: float = 1.0
    omega: float = 1.0
    lam: float = 50.0

    def __post_init__(self):
        for name in ("omega0", "omega", "lam"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ContractViolationError(f"{name} must be >= 0 and finite, got {v}")


def vote_weight(min_d: float, config: VoteConfig | None = None) -> float:
    """Penalty omega0 + omega * (1 + tanh(min_d - lam)).

    Ranges over (omega0, omega0 + 2 omega), hitting omega0 + omega exactly at
    min_d == lam.
    """
    cfg = config or VoteConfig()
    if np.isnan(min_d) or min_d < 0:
        raise ContractViolationError(f"min_d must be >= 0, got {min_d}")
    return float(cfg.omega0 + cfg.omega * (1.0 + np.tanh(min_d - cfg.lam)))
