"""Per-sensor Kalman experts with reliability scoring.

Each expert filters one sensor and grades that sensor's current measurement
with a Mahalanobis distance against its own prediction, squashed through a
shifted sigmoid. The resulting weight ``w_M`` is a PENALTY: near 0 means the
measurement is consistent with the expert's belief, near 1 means it is far
outside the expected spread and should be distrusted. The shift ``xi`` is the
square root of a chi-square quantile, so "far" is calibrated to a chosen
false-alarm rate on nominal data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import expit
from scipy.stats import chi2

from .errors import ContractViolationError, DegenerateGeometryError
from .kalman import GaussianState, LinearModel, kf_predict, kf_update

__all__ = [
    "mahalanobis",
    "mahalanobis_diag",
    "local_weight",
    "chi2_xi",
    "ExpertConfig",
    "ExpertReport",
    "Expert",
]

# Keep sigmoid output inside the open interval when float64 saturates.
_W_LO = 1e-300
_W_HI = float(np.nextafter(1.0, 0.0))


def mahalanobis(y, mu, cov) -> float:
    """Exact Mahalanobis distance sqrt((y-mu)^T cov^-1 (y-mu)).

    ``cov`` must be symmetric positive definite; a singular matrix raises
    DegenerateGeometryError.
    """
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    cov = np.asarray(cov, dtype=float)
    if y.shape != mu.shape or y.ndim != 1:
        raise ContractViolationError(
            f"y and mu must be matching vectors, got {y.shape} and {mu.shape}"
        )
    if cov.shape != (y.shape[0], y.shape[0]):
        raise ContractViolationError(
            f"cov shape {cov.shape} does not match vector length {y.shape[0]}"
        )
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(mu)) and np.all(np.isfinite(cov))):
        raise ContractViolationError("non-finite input to mahalanobis")
    q = y - mu
    try:
        factor = cho_factor(cov, lower=True)
    except np.linalg.LinAlgError as exc:
        raise DegenerateGeometryError(
            "covariance is not positive definite", float(np.linalg.cond(cov))
        ) from exc
    d2 = float(q @ cho_solve(factor, q))
    return float(np.sqrt(max(d2, 0.0)))


def mahalanobis_diag(y, mu, cov_diag) -> float:
    """Cheap per-component distance: sum of |y_i - mu_i| / sqrt(C_i).

    This is the component-root form (a sum of square roots, not the root of a
    sum), so on diagonal covariances it upper-bounds the exact distance.
    ``cov_diag`` entries must be strictly positive.
    """
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    c = np.asarray(cov_diag, dtype=float)
    if y.shape != mu.shape or y.shape != c.shape or y.ndim != 1:
        raise ContractViolationError(
            f"mismatched shapes: y {y.shape}, mu {mu.shape}, cov_diag {c.shape}"
        )
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(mu)) and np.all(np.isfinite(c))):
        raise ContractViolationError("non-finite input to mahalanobis_diag")
    if np.any(c <= 0):
        raise ContractViolationError("cov_diag entries must be strictly positive")
    return float(np.sum(np.abs(y - mu) / np.sqrt(c)))


def local_weight(md: float, xi: float) -> float:
    """Sigmoid penalty 1 / (1 + exp(-(md - xi))).

    Equals 0.5 exactly at md == xi and increases strictly with md. Output is
    clamped into the open interval (0, 1) where float64 would saturate.
    """
    if not np.isfinite(xi):
        raise ContractViolationError(f"xi must be finite, got {xi}")
    if np.isnan(md) or md < 0:
        raise ContractViolationError(f"md must be >= 0, got {md}")
    w = float(expit(md - xi))
    return min(max(w, _W_LO), _W_HI)


def chi2_xi(dof: int, confidence: float = 0.95) -> float:
    """Sigmoid midpoint: sqrt of the chi-square quantile at ``confidence``.

    With this shift, a nominal Gaussian residual of ``dof`` dimensions lands
    past the midpoint with probability 1 - confidence.
    """
    if int(dof) != dof or dof < 1:
        raise ContractViolationError(f"dof must be a positive integer, got {dof}")
    if not (0.0 < confidence < 1.0):
        raise ContractViolationError(f"confidence must be in (0, 1), got {confidence}")
    return float(np.sqrt(chi2.ppf(confidence, int(dof))))


@dataclass(frozen=True)
class ExpertConfig:
    """Reliability-scoring knobs for one expert.

    xi: sigmoid midpoint; defaults to the 4-dof / 95% chi-square root, the
        bounding-box case. Scalar sensors want chi2_xi(1, confidence).
    use_diag_approx: score with the cheap per-component distance instead of
        the exact form. The exact form is the default because xi's chi-square
        calibration only holds for it.
    """

    xi: float = field(default_factory=lambda: chi2_xi(4, 0.95))
    use_diag_approx: bool = False

    def __post_init__(self):
        if not (np.isfinite(self.xi) and self.xi > 0):
            raise ContractViolationError(f"xi must be positive and finite, got {self.xi}")


@dataclass(frozen=True)
class ExpertReport:
    """One expert's per-frame output: posterior belief plus reliability score."""

    posterior: GaussianState
    predicted_meas: np.ndarray
    innovation_cov: np.ndarray
    md: float
    w_M: float
    frame: int

    def __post_init__(self):
        if not (self.md >= 0 and np.isfinite(self.md)):
            raise ContractViolationError(f"md must be finite and >= 0, got {self.md}")
        if not (0.0 < self.w_M < 1.0):
            raise ContractViolationError(f"w_M must lie in (0, 1), got {self.w_M}")


class Expert:
    """Kalman filter plus reliability scorer for a single sensor.

    The expert initializes lazily from the first measurement it sees
    (measured slots copied in, velocities zero, covariance ``init_var`` I).
    While the sensor reports nothing, ``step(None)`` coasts on the prediction
    and scores the LAST seen measurement against the current predicted
    distribution, so the penalty of a stale sensor grows as the world moves
    on. After ``stale_after`` consecutive misses the covariance is reset on
    reacquisition, so the expert re-anchors rather than fighting its history.
    """

    def __init__(self, model: LinearModel, config: ExpertConfig | None = None,
                 init_var: float = 1e4, stale_after: int | None = None):
        if not (np.isfinite(init_var) and init_var > 0):
            raise ContractViolationError(f"init_var must be positive, got {init_var}")
        if stale_after is not None and stale_after < 1:
            raise ContractViolationError(f"stale_after must be >= 1, got {stale_after}")
        self.model = model
        self.config = config or ExpertConfig()
        self.init_cov = init_var * np.eye(model.state_dim)
        self.stale_after = stale_after
        self.state: GaussianState | None = None
        self.last_meas: np.ndarray | None = None
        self.misses = 0
        self.frame = -1

    def _distance(self, y: np.ndarray, mu: np.ndarray, S: np.ndarray) -> float:
        if self.config.use_diag_approx:
            return mahalanobis_diag(y, mu, np.diag(S))
        return mahalanobis(y, mu, S)

    def step(self, y=None) -> ExpertReport | None:
        """Advance one frame with measurement ``y`` (None = sensor silent).

        Returns None until the first measurement arrives; afterwards always
        returns a report, coasting included.
        """
        self.frame += 1
        if self.state is None:
            if y is None:
                return None
            y = np.asarray(y, dtype=float)
            mean = self.model.C.T @ y  # measured slots filled, rates zero
            self.state = GaussianState(mean, self.init_cov)

        if y is not None and self.stale_after is not None and self.misses >= self.stale_after:
            # Reacquisition after a long gap: belief is void, keep the mean
            # but reopen the covariance so the fresh measurement dominates.
            self.state = GaussianState(self.state.mean, self.init_cov)

        pred = kf_predict(self.state, self.model)
        mu = self.model.C @ pred.mean
        S = self.model.C @ pred.cov @ self.model.C.T + self.model.Rvv
        S = 0.5 * (S + S.T)

        if y is not None:
            y = np.asarray(y, dtype=float)
            md = self._distance(y, mu, S)
            w = local_weight(md, self.config.xi)
            posterior, _, _ = kf_update(pred, self.model, y)
            self.state = posterior
            self.last_meas = y.copy()
            self.misses = 0
        else:
            md = self._distance(self.last_meas, mu, S)
            w = local_weight(md, self.config.xi)
            posterior = pred
            self.state = pred
            self.misses += 1

        return ExpertReport(posterior, mu, S, md, w, self.frame)
