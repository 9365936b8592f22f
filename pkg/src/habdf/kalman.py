"""Linear Kalman filtering on explicit Gaussian state.

The filter is written as pure functions over value types: ``kf_predict`` and
``kf_update`` return new ``GaussianState`` objects and never mutate their
inputs. ``build_cv_model`` assembles the constant-velocity model family used
everywhere else in the package; ``build_track_model`` is its four-axis
instance for bounding-box tracks ``(u, v, h, w)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolationError, DegenerateGeometryError

__all__ = [
    "GaussianState",
    "LinearModel",
    "kf_predict",
    "kf_update",
    "build_cv_model",
    "build_track_model",
]

# Innovation covariances with condition numbers past this are treated as
# singular rather than inverted.
COND_LIMIT = 1e12

# Symmetry/PSD construction tolerance, scaled by max(1, max|cov|) so that
# large covariance scales do not trip float64 eigenvalue noise.
_PSD_TOL = 1e-9


def _as_matrix(x, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim != 2:
        raise ContractViolationError(f"{name} must be a 2-D array, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise ContractViolationError(f"{name} contains non-finite entries")
    return a


def _check_psd(m: np.ndarray, name: str) -> np.ndarray:
    """Validate symmetry and positive semidefiniteness, return symmetrized copy."""
    if m.shape[0] != m.shape[1]:
        raise ContractViolationError(f"{name} must be square, got {m.shape}")
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    if not np.allclose(m, m.T, atol=_PSD_TOL * scale, rtol=0.0):
        raise ContractViolationError(f"{name} is not symmetric within tolerance")
    sym = 0.5 * (m + m.T)
    if sym.shape[0] and float(np.linalg.eigvalsh(sym).min()) < -_PSD_TOL * scale:
        raise ContractViolationError(f"{name} is not positive semidefinite")
    return sym


@dataclass(frozen=True)
class GaussianState:
    """Gaussian belief: mean vector and covariance matrix.

    The covariance is validated (symmetric, PSD within tolerance) and stored
    exactly symmetrized, so any predict/update sequence preserves the
    invariants by construction.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        if mean.ndim != 1:
            raise ContractViolationError(f"mean must be 1-D, got ndim={mean.ndim}")
        if not np.all(np.isfinite(mean)):
            raise ContractViolationError("mean contains non-finite entries")
        cov = _check_psd(_as_matrix(self.cov, "cov"), "cov")
        if cov.shape[0] != mean.shape[0]:
            raise ContractViolationError(
                f"cov shape {cov.shape} does not match mean length {mean.shape[0]}"
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class LinearModel:
    """Discrete linear state-space model x' = A x + B u + w, y = C x + v.

    ``Rww`` and ``Rvv`` are the process and measurement noise covariances.
    ``B`` may have zero columns when there is no control input.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    Rww: np.ndarray
    Rvv: np.ndarray

    def __post_init__(self):
        A = _as_matrix(self.A, "A")
        n = A.shape[0]
        if A.shape != (n, n):
            raise ContractViolationError(f"A must be square, got {A.shape}")
        B = _as_matrix(self.B, "B")
        if B.shape[0] != n:
            raise ContractViolationError(f"B rows {B.shape[0]} != state dim {n}")
        C = _as_matrix(self.C, "C")
        if C.shape[1] != n:
            raise ContractViolationError(f"C cols {C.shape[1]} != state dim {n}")
        Rww = _check_psd(_as_matrix(self.Rww, "Rww"), "Rww")
        if Rww.shape != (n, n):
            raise ContractViolationError(f"Rww shape {Rww.shape} != ({n}, {n})")
        p = C.shape[0]
        Rvv = _check_psd(_as_matrix(self.Rvv, "Rvv"), "Rvv")
        if Rvv.shape != (p, p):
            raise ContractViolationError(f"Rvv shape {Rvv.shape} != ({p}, {p})")
        for name, val in (("A", A), ("B", B), ("C", C), ("Rww", Rww), ("Rvv", Rvv)):
            object.__setattr__(self, name, val)

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]

    @property
    def meas_dim(self) -> int:
        return self.C.shape[0]


def _trusted_state(mean: np.ndarray, cov: np.ndarray) -> GaussianState:
    # Internal fast path: the filter equations preserve symmetry and PSD, so
    # states built from already-validated inputs skip re-validation.
    obj = object.__new__(GaussianState)
    object.__setattr__(obj, "mean", mean)
    object.__setattr__(obj, "cov", cov)
    return obj


def _trusted_model(A, B, C, Rww, Rvv) -> LinearModel:
    # Internal fast path for models assembled from validated pieces.
    obj = object.__new__(LinearModel)
    for name, val in (("A", A), ("B", B), ("C", C), ("Rww", Rww), ("Rvv", Rvv)):
        object.__setattr__(obj, name, val)
    return obj


def kf_predict(state: GaussianState, model: LinearModel, control=None) -> GaussianState:
    """Time update: propagate mean through A (plus B u) and inflate covariance.

    ``control`` of None means no input term; otherwise its length must match
    B's column count.
    """
    if state.dim != model.state_dim:
        raise ContractViolationError(
            f"state dim {state.dim} != model state dim {model.state_dim}"
        )
    mean = model.A @ state.mean
    if control is not None:
        u = np.asarray(control, dtype=float)
        if u.shape != (model.B.shape[1],):
            raise ContractViolationError(
                f"control shape {u.shape} != ({model.B.shape[1]},)"
            )
        if not np.all(np.isfinite(u)):
            raise ContractViolationError("control contains non-finite entries")
        mean = mean + model.B @ u
    cov = model.A @ state.cov @ model.A.T + model.Rww
    return _trusted_state(mean, 0.5 * (cov + cov.T))


def kf_update(state: GaussianState, model: LinearModel, y):
    """Measurement update; returns ``(posterior, innovation, innovation_cov)``.

    The posterior covariance uses the Joseph stabilized form, keeping it
    symmetric PSD regardless of gain rounding. A singular innovation
    covariance (condition number past COND_LIMIT) raises
    DegenerateGeometryError instead of producing garbage.
    """
    if state.dim != model.state_dim:
        raise ContractViolationError(
            f"state dim {state.dim} != model state dim {model.state_dim}"
        )
    y = np.asarray(y, dtype=float)
    if y.shape != (model.meas_dim,):
        raise ContractViolationError(
            f"measurement shape {y.shape} != ({model.meas_dim},)"
        )
    if not np.all(np.isfinite(y)):
        raise ContractViolationError("measurement contains non-finite entries")

    C, P = model.C, state.cov
    S = C @ P @ C.T + model.Rvv
    S = 0.5 * (S + S.T)
    cond = float(np.linalg.cond(S))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise DegenerateGeometryError("innovation covariance is singular", cond)

    innovation = y - C @ state.mean
    K = np.linalg.solve(S, C @ P).T
    mean = state.mean + K @ innovation
    I_KC = np.eye(state.dim) - K @ C
    cov = I_KC @ P @ I_KC.T + K @ model.Rvv @ K.T
    return _trusted_state(mean, 0.5 * (cov + cov.T)), innovation, S


def build_cv_model(n_axes: int, dt: float, accel_var: float, meas_var: float) -> LinearModel:
    """Constant-velocity model over ``n_axes`` independent axes.

    State layout is all positions first, then the matching velocities, so a
    position gains ``dt`` times its velocity each step. Process noise follows
    the discrete white-noise-acceleration model: a random per-step
    acceleration a with variance ``accel_var`` enters as position += a dt^2/2,
    velocity += a dt. Measurements are the positions with isotropic variance
    ``meas_var``; there is no control input.
    """
    if n_axes < 1:
        raise ContractViolationError(f"n_axes must be >= 1, got {n_axes}")
    if not (np.isfinite(dt) and dt > 0):
        raise ContractViolationError(f"dt must be positive and finite, got {dt}")
    if not (np.isfinite(accel_var) and accel_var >= 0):
        raise ContractViolationError(f"accel_var must be >= 0, got {accel_var}")
    if not (np.isfinite(meas_var) and meas_var >= 0):
        raise ContractViolationError(f"meas_var must be >= 0, got {meas_var}")

    k = n_axes
    n = 2 * k
    A = np.eye(n)
    A[:k, k:] = dt * np.eye(k)
    B = np.zeros((n, 1))  # kept in the generic API; no control here
    C = np.hstack([np.eye(k), np.zeros((k, k))])
    g = np.array([0.5 * dt * dt, dt])
    q = accel_var * np.outer(g, g)
    Rww = np.zeros((n, n))
    for i in range(k):
        idx = np.array([i, k + i])
        Rww[np.ix_(idx, idx)] = q
    Rvv = meas_var * np.eye(k)
    return LinearModel(A, B, C, Rww, Rvv)


def build_track_model(dt: float = 1.0, accel_var: float = 1.0, meas_var: float = 25.0) -> LinearModel:
    """Bounding-box track model: state (u, v, h, w, and their rates)."""
    return build_cv_model(4, dt, accel_var, meas_var)
