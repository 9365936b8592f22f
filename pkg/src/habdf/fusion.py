"""Fusion center: a Kalman filter whose measurement noise is steered online.

The center stacks the experts' positional estimates into one measurement
vector and re-derives the noise block of each detector every frame from the
two penalties: ``rvv = gamma * w_d + delta * w_M`` (floored). A detector both
isolated from its peers and inconsistent with its own expert gets a large
block, which is the same as being politely ignored. ``gamma``/``delta`` are
per-detector gains encoding prior knowledge of each sensor; 1.0 when there is
none.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolationError, InsufficientDetectorsError
from .experts import Expert, ExpertConfig, ExpertReport
from .kalman import (
    GaussianState,
    LinearModel,
    _trusted_model,
    kf_predict,
    kf_update,
)
from .voting import VoteConfig, box_distance, vote_weight

__all__ = [
    "adapt_rvv",
    "FusionConfig",
    "PerDetector",
    "FusedEstimate",
    "FusionCenter",
    "Pipeline",
    "make_pipeline",
]


def adapt_rvv(w_d: float, w_M: float, gamma: float = 1.0, delta: float = 1.0,
              cov_floor: float = 1e-6) -> float:
    """Adapted measurement variance: max(gamma * w_d + delta * w_M, cov_floor)."""
    if not (np.isfinite(w_d) and w_d >= 0):
        raise ContractViolationError(f"w_d must be finite and >= 0, got {w_d}")
    if not (0.0 <= w_M <= 1.0):
        raise ContractViolationError(f"w_M must lie in [0, 1], got {w_M}")
    if not (gamma > 0 and delta > 0 and np.isfinite(gamma) and np.isfinite(delta)):
        raise ContractViolationError(f"gamma/delta must be > 0, got {gamma}, {delta}")
    if not (cov_floor > 0 and np.isfinite(cov_floor)):
        raise ContractViolationError(f"cov_floor must be > 0, got {cov_floor}")
    return float(max(gamma * w_d + delta * w_M, cov_floor))


@dataclass(frozen=True)
class FusionConfig:
    """Fusion knobs.

    gamma, delta: per-detector gains on the vote and reliability penalties;
        scalars broadcast to all detectors.
    cov_floor: lower bound keeping adapted noise positive definite.
    stale_after: consecutive silent frames after which an expert's covariance
        is reset on reacquisition.
    """

    gamma: float | tuple = 1.0
    delta: float | tuple = 1.0
    cov_floor: float = 1e-6
    stale_after: int = 30
    vote: VoteConfig = field(default_factory=VoteConfig)
    expert: ExpertConfig = field(default_factory=ExpertConfig)

    def __post_init__(self):
        if not (self.cov_floor > 0 and np.isfinite(self.cov_floor)):
            raise ContractViolationError(f"cov_floor must be > 0, got {self.cov_floor}")
        if self.stale_after < 1:
            raise ContractViolationError(f"stale_after must be >= 1, got {self.stale_after}")

    def gains(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Broadcast gamma/delta to per-detector arrays of length n."""
        out = []
        for name, val in (("gamma", self.gamma), ("delta", self.delta)):
            arr = np.broadcast_to(np.asarray(val, dtype=float), (n,)).copy()
            if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
                raise ContractViolationError(f"{name} entries must be > 0 and finite")
            out.append(arr)
        return out[0], out[1]


@dataclass(frozen=True)
class PerDetector:
    """Per-frame diagnostics for one detector (NaN where absent)."""

    w_d: float
    w_M: float
    rvv_scale: float


@dataclass(frozen=True)
class FusedEstimate:
    """Fusion output for one frame: center belief plus per-detector weights."""

    state: GaussianState
    per_detector: tuple[PerDetector, ...]
    frame: int
    coasting: bool = False


class FusionCenter:
    """Stacked-measurement Kalman filter with per-detector adaptive noise.

    ``model`` describes a single detector; the center shares its dynamics and
    stacks one copy of its measurement block per present detector. Absent
    detectors contribute no measurement rows. With none present the center
    coasts on its prediction and flags the estimate.
    """

    def __init__(self, model: LinearModel, n_detectors: int,
                 config: FusionConfig | None = None, init_var: float = 1e4):
        if n_detectors < 3:
            raise InsufficientDetectorsError(
                f"majority voting needs at least 3 detectors, got {n_detectors}"
            )
        if not (np.isfinite(init_var) and init_var > 0):
            raise ContractViolationError(f"init_var must be positive, got {init_var}")
        self.model = model
        self.n_detectors = n_detectors
        self.config = config or FusionConfig()
        self.gamma, self.delta = self.config.gains(n_detectors)
        self.init_cov = init_var * np.eye(model.state_dim)
        self.state: GaussianState | None = None
        self.frame = -1

    def step(self, reports, measurements) -> FusedEstimate | None:
        """Fuse one frame.

        reports: per-detector ExpertReport or None, aligned with
        measurements (the raw per-detector readings or None). Voting runs on
        the raw readings; the stacked measurement vector carries the experts'
        positional estimates. Returns None until the first frame with any
        detector present.
        """
        self.frame += 1
        n = self.n_detectors
        if len(reports) != n or len(measurements) != n:
            raise ContractViolationError(
                f"expected {n} reports and measurements, got "
                f"{len(reports)} and {len(measurements)}"
            )
        present = [
            i for i in range(n)
            if measurements[i] is not None and reports[i] is not None
        ]

        w_d = np.full(n, np.nan)
        if len(present) == 1:
            # A lone detector has no peers to disagree with.
            w_d[present[0]] = vote_weight(0.0, self.config.vote)
        elif len(present) >= 2:
            vecs = [np.asarray(measurements[i], dtype=float) for i in present]
            for k, i in enumerate(present):
                dmin = min(
                    box_distance(vecs[k], vecs[j])
                    for j in range(len(vecs)) if j != k
                )
                w_d[i] = vote_weight(dmin, self.config.vote)

        w_m = np.array([
            reports[i].w_M if reports[i] is not None else np.nan for i in range(n)
        ])
        scale = np.full(n, np.nan)
        for i in present:
            scale[i] = adapt_rvv(
                w_d[i], w_m[i], self.gamma[i], self.delta[i], self.config.cov_floor
            )

        if self.state is None:
            if not present:
                return None
            parts = [self.model.C @ reports[i].posterior.mean for i in present]
            mean0 = self.model.C.T @ np.mean(parts, axis=0)
            self.state = GaussianState(mean0, self.init_cov)

        pred = kf_predict(self.state, self.model)
        per = tuple(PerDetector(w_d[i], w_m[i], scale[i]) for i in range(n))

        if not present:
            self.state = pred
            return FusedEstimate(pred, per, self.frame, coasting=True)

        p = self.model.meas_dim
        c_stack = np.vstack([self.model.C] * len(present))
        y_stack = np.concatenate(
            [self.model.C @ reports[i].posterior.mean for i in present]
        )
        r_stack = np.diag(np.repeat(scale[present], p))
        # Assembled from validated pieces: PD by the floor, shapes by stacking.
        stacked = _trusted_model(
            self.model.A, self.model.B, c_stack, self.model.Rww, r_stack
        )
        post, _, _ = kf_update(pred, stacked, y_stack)
        self.state = post
        return FusedEstimate(post, per, self.frame, coasting=False)


class Pipeline:
    """Expert bank plus fusion center sharing one frame clock."""

    def __init__(self, models, config: FusionConfig | None = None, init_var: float = 1e4):
        models = list(models)
        if len(models) < 3:
            raise InsufficientDetectorsError(
                f"majority voting needs at least 3 detectors, got {len(models)}"
            )
        dims = {(m.state_dim, m.meas_dim) for m in models}
        if len(dims) != 1:
            raise ContractViolationError(f"expert models disagree on dimensions: {dims}")
        self.config = config or FusionConfig()
        self.experts = [
            Expert(m, self.config.expert, init_var, self.config.stale_after)
            for m in models
        ]
        self.center = FusionCenter(models[0], len(models), self.config, init_var)
        self.last_reports: list[ExpertReport | None] = [None] * len(models)

    @property
    def n_detectors(self) -> int:
        return len(self.experts)

    def step(self, measurements) -> FusedEstimate | None:
        """Feed one frame of per-detector measurements (None = absent)."""
        if len(measurements) != len(self.experts):
            raise ContractViolationError(
                f"expected {len(self.experts)} measurements, got {len(measurements)}"
            )
        ys = [
            None if y is None else np.asarray(y, dtype=float)
            for y in measurements
        ]
        self.last_reports = [e.step(y) for e, y in zip(self.experts, ys)]
        return self.center.step(self.last_reports, ys)


def make_pipeline(n_detectors: int, model, config: FusionConfig | None = None,
                  init_var: float = 1e4) -> Pipeline:
    """Build a bank of ``n_detectors`` experts plus the fusion center.

    ``model`` is one LinearModel shared by every detector, or a sequence of
    per-detector models agreeing on dimensions.
    """
    if isinstance(model, LinearModel):
        models = [model] * n_detectors
    else:
        models = list(model)
        if len(models) != n_detectors:
            raise ContractViolationError(
                f"got {len(models)} models for {n_detectors} detectors"
            )
    return Pipeline(models, config, init_var)
