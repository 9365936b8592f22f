"""Virtual test bench: a second-order plant watched by faulty sensors.

The bench produces a ground-truth signal by driving a second-order plant
with a set-point profile, clones it through several sensors with injected
faults (noise, spikes, drift, shock offsets), and runs the full expert bank
plus fusion center over the readings. Everything is deterministic under a
fixed seed, with per-sensor RNG streams so evaluation order never matters.

A positional PID controller is included for closed-loop demos; the original
use case steers a pan/tilt camera with it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .errors import ContractViolationError, InsufficientDetectorsError
from .experts import ExpertConfig, chi2_xi
from .fusion import FusionConfig, make_pipeline
from .kalman import build_cv_model
from .voting import VoteConfig

__all__ = [
    "SecondOrderPlant",
    "plant_step",
    "steady_state",
    "run_plant",
    "setpoint_profile",
    "FaultProfile",
    "inject_faults",
    "PidGains",
    "PidState",
    "pid_step",
    "run_pan_loop",
    "SimScenario",
    "SimResult",
    "run_sim_experiment",
]


@dataclass(frozen=True)
class SecondOrderPlant:
    """Standard second-order lag: gain * wn^2 / (s^2 + 2 zeta wn s + wn^2).

    State is (output, output rate). ``dt`` is the sample period in seconds.
    """

    natural_freq: float
    damping: float
    gain: float = 1.0
    dt: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.natural_freq) and self.natural_freq > 0):
            raise ContractViolationError(f"natural_freq must be > 0, got {self.natural_freq}")
        if not (np.isfinite(self.damping) and self.damping >= 0):
            raise ContractViolationError(f"damping must be >= 0, got {self.damping}")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ContractViolationError(f"dt must be > 0, got {self.dt}")
        if not np.isfinite(self.gain):
            raise ContractViolationError(f"gain must be finite, got {self.gain}")


@lru_cache(maxsize=64)
def _zoh(natural_freq: float, damping: float, gain: float, dt: float):
    # Exact zero-order-hold discretization via the matrix exponential of the
    # companion form augmented with the input column.
    wn, z = natural_freq, damping
    m = np.zeros((3, 3))
    m[0, 1] = 1.0
    m[1, 0] = -wn * wn
    m[1, 1] = -2.0 * z * wn
    m[1, 2] = gain * wn * wn
    em = expm(m * dt)
    return em[:2, :2].copy(), em[:2, 2].copy()


def plant_step(state, plant: SecondOrderPlant, u: float):
    """Advance one sample under held input ``u``; returns (new_state, output)."""
    x = np.asarray(state, dtype=float)
    if x.shape != (2,) or not np.all(np.isfinite(x)):
        raise ContractViolationError(f"plant state must be a finite 2-vector, got {x}")
    if not np.isfinite(u):
        raise ContractViolationError(f"input must be finite, got {u}")
    ad, bd = _zoh(plant.natural_freq, plant.damping, plant.gain, plant.dt)
    new = ad @ x + bd * u
    return new, float(new[0])


def steady_state(plant: SecondOrderPlant, u: float) -> np.ndarray:
    """Equilibrium state under constant input ``u``: output gain*u, rate 0."""
    return np.array([plant.gain * u, 0.0])


def run_plant(plant: SecondOrderPlant, inputs, x0=None) -> np.ndarray:
    """Sample-then-step simulation; outputs[t] is the state BEFORE inputs[t] acts."""
    u = np.asarray(inputs, dtype=float)
    x = np.zeros(2) if x0 is None else np.asarray(x0, dtype=float)
    out = np.empty(u.shape[0])
    for t in range(u.shape[0]):
        out[t] = x[0]
        x, _ = plant_step(x, plant, u[t])
    return out


def setpoint_profile(kind: str, n: int, amplitude: float = 1.0, period: int = 200,
                     value: float = 0.0) -> np.ndarray:
    """Set-point sequences: constant ``value``, alternating square wave of
    +/- ``amplitude`` switching every ``period`` samples, or a repeating ramp
    from 0 to ``amplitude`` over ``period`` samples."""
    if n < 1:
        raise ContractViolationError(f"n must be >= 1, got {n}")
    t = np.arange(n)
    if kind == "constant":
        return np.full(n, float(value))
    if period < 1:
        raise ContractViolationError(f"period must be >= 1, got {period}")
    if kind == "square":
        return amplitude * (1.0 - 2.0 * ((t // period) % 2))
    if kind == "ramp":
        return amplitude * ((t % period) / period)
    raise ContractViolationError(f"unknown setpoint kind {kind!r}")


@dataclass(frozen=True)
class FaultProfile:
    """Additive fault recipe for one sensor.

    reading[t] = clean[t] + N(0, noise_sigma) + spike_mag * Bernoulli(spike_prob)
                 + drift_rate * t + shock_offset * [shock_start <= t < shock_end]

    The all-zero profile is the identity. ``seed`` feeds this sensor's private
    RNG stream; draw order is noise first, then spikes.
    """

    noise_sigma: float = 0.0
    spike_prob: float = 0.0
    spike_mag: float = 0.0
    drift_rate: float = 0.0
    shock_offset: float = 0.0
    shock_window: tuple[int, int] = (0, 0)
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.noise_sigma) and self.noise_sigma >= 0):
            raise ContractViolationError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if not (0.0 <= self.spike_prob <= 1.0):
            raise ContractViolationError(f"spike_prob must be in [0, 1], got {self.spike_prob}")
        for name in ("spike_mag", "drift_rate", "shock_offset"):
            if not np.isfinite(getattr(self, name)):
                raise ContractViolationError(f"{name} must be finite")
        start, end = self.shock_window
        if int(start) != start or int(end) != end or start > end:
            raise ContractViolationError(
                f"shock_window must be ordered integers, got {self.shock_window}"
            )
        if int(self.seed) != self.seed or self.seed < 0:
            raise ContractViolationError(f"seed must be a nonnegative integer, got {self.seed}")


def inject_faults(clean, profile: FaultProfile) -> np.ndarray:
    """Apply the fault recipe to a clean signal; the input is never mutated."""
    x = np.asarray(clean, dtype=float)
    if x.ndim != 1:
        raise ContractViolationError(f"clean signal must be 1-D, got ndim={x.ndim}")
    if not np.all(np.isfinite(x)):
        raise ContractViolationError("clean signal contains non-finite entries")
    t = np.arange(x.shape[0])
    rng = np.random.default_rng(int(profile.seed))
    y = x + rng.normal(0.0, profile.noise_sigma, x.shape[0])
    y = y + profile.spike_mag * (rng.random(x.shape[0]) < profile.spike_prob)
    y = y + profile.drift_rate * t
    start, end = profile.shock_window
    y = y + profile.shock_offset * ((t >= start) & (t < end))
    return y


@dataclass(frozen=True)
class PidGains:
    """Positional PID gains; ``integral_limit`` clamps |integral| (anti-windup)."""

    kp: float
    ki: float
    kd: float
    dt: float
    integral_limit: float | None = None

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ContractViolationError(f"dt must be > 0, got {self.dt}")
        for name in ("kp", "ki", "kd"):
            if not np.isfinite(getattr(self, name)):
                raise ContractViolationError(f"{name} must be finite")
        if self.integral_limit is not None and not self.integral_limit > 0:
            raise ContractViolationError(
                f"integral_limit must be > 0 or None, got {self.integral_limit}"
            )


@dataclass(frozen=True)
class PidState:
    integral: float = 0.0
    prev_error: float = 0.0


def pid_step(error: float, state: PidState, gains: PidGains):
    """One positional PID update; returns (command, new_state).

    Integral uses the trapezoid rule, derivative the backward difference.
    """
    if not np.isfinite(error):
        raise ContractViolationError(f"error must be finite, got {error}")
    integral = state.integral + 0.5 * (error + state.prev_error) * gains.dt
    if gains.integral_limit is not None:
        lim = gains.integral_limit
        integral = min(max(integral, -lim), lim)
    derivative = (error - state.prev_error) / gains.dt
    command = gains.kp * error + gains.ki * integral + gains.kd * derivative
    return float(command), PidState(integral, error)


def run_pan_loop(gains: PidGains, frames: int, setpoint: float = 0.0,
                 disturbance: float = 0.0, disturb_at: int = 0,
                 plant_gain: float = 0.02) -> np.ndarray:
    """Close the PID loop around a pan-axis integrator plant.

    The plant integrates ``plant_gain`` times the velocity command plus a
    constant disturbance switched on at sample ``disturb_at``; the gain is the
    axis rate response per command unit, small for a geared servo. Returns the
    angle trajectory. Note the derivative term's loop gain through an
    integrator is kd * plant_gain, which must stay below 1 for stability.
    """
    if frames < 1:
        raise ContractViolationError(f"frames must be >= 1, got {frames}")
    if not (np.isfinite(plant_gain) and plant_gain > 0):
        raise ContractViolationError(f"plant_gain must be > 0, got {plant_gain}")
    x = 0.0
    st = PidState()
    out = np.empty(frames)
    for t in range(frames):
        u, st = pid_step(setpoint - x, st, gains)
        d = disturbance if t >= disturb_at else 0.0
        x = x + gains.dt * plant_gain * (u + d)
        out[t] = x
    return out


@dataclass(frozen=True)
class SimScenario:
    """Full bench description: plant, set-point, sensor faults, fusion knobs.

    The filter bank runs on the frame clock (``filter_dt`` frames), decoupled
    from the plant's physical ``dt``. Expert xi defaults to the 1-dof
    chi-square root at ``confidence`` since bench measurements are scalar.
    """

    frames: int
    dt: float
    natural_freq: float = 2.0
    damping: float = 0.7
    plant_gain: float = 100.0
    start_at_steady: bool = True
    setpoint_kind: str = "square"
    setpoint_amplitude: float = 1.0
    setpoint_period: int = 200
    setpoint_value: float = 0.0
    faults: tuple[FaultProfile, ...] = ()
    filter_dt: float = 1.0
    accel_var: float = 0.05
    meas_var: float | tuple = 4.0  # scalar broadcasts; tuple = per-sensor
    init_var: float = 1e4
    confidence: float = 0.95
    xi: float | None = None
    use_diag_approx: bool = False
    vote: VoteConfig = field(default_factory=VoteConfig)
    gamma: float | tuple = 1.0
    delta: float | tuple = 1.0
    cov_floor: float = 1e-6
    stale_after: int = 30
    seed: int = 0

    def __post_init__(self):
        if self.frames < 1:
            raise ContractViolationError(f"frames must be >= 1, got {self.frames}")

    def plant(self) -> SecondOrderPlant:
        return SecondOrderPlant(self.natural_freq, self.damping, self.plant_gain, self.dt)

    def fusion_config(self) -> FusionConfig:
        xi = self.xi if self.xi is not None else chi2_xi(1, self.confidence)
        expert = ExpertConfig(xi=xi, use_diag_approx=self.use_diag_approx)
        return FusionConfig(
            gamma=self.gamma, delta=self.delta, cov_floor=self.cov_floor,
            stale_after=self.stale_after, vote=self.vote, expert=expert,
        )


@dataclass(frozen=True)
class SimResult:
    """Per-frame bench record, sensors stacked row-wise."""

    frame: np.ndarray
    truth: np.ndarray
    sensors: np.ndarray
    experts: np.ndarray
    w_m: np.ndarray
    w_d: np.ndarray
    rvv: np.ndarray
    fused: np.ndarray
    fused_var: np.ndarray
    seed: int

    @property
    def n_sensors(self) -> int:
        return self.sensors.shape[0]

    def sensor_rmse(self) -> np.ndarray:
        return np.sqrt(np.mean((self.sensors - self.truth) ** 2, axis=1))

    def expert_rmse(self) -> np.ndarray:
        return np.sqrt(np.mean((self.experts - self.truth) ** 2, axis=1))

    def fused_rmse(self) -> float:
        return float(np.sqrt(np.mean((self.fused - self.truth) ** 2)))


def _sensor_seeds(run_seed: int, n: int) -> list[int]:
    children = np.random.SeedSequence(int(run_seed)).spawn(n)
    return [int(c.generate_state(1)[0]) for c in children]


def run_sim_experiment(scenario: SimScenario, seed: int | None = None) -> SimResult:
    """Run the bench end to end; ``seed`` overrides the scenario's.

    Per-sensor RNG streams are spawned from the run seed, so results are
    bit-identical for a fixed seed regardless of sensor evaluation order.
    """
    n = len(scenario.faults)
    if n < 3:
        raise InsufficientDetectorsError(
            f"the bench needs at least 3 sensors, got {n}"
        )
    run_seed = scenario.seed if seed is None else int(seed)

    sp = setpoint_profile(
        scenario.setpoint_kind, scenario.frames, scenario.setpoint_amplitude,
        scenario.setpoint_period, scenario.setpoint_value,
    )
    plant = scenario.plant()
    x0 = steady_state(plant, sp[0]) if scenario.start_at_steady else None
    truth = run_plant(plant, sp, x0)

    profiles = [
        replace(prof, seed=s)
        for prof, s in zip(scenario.faults, _sensor_seeds(run_seed, n))
    ]
    sensors = np.stack([inject_faults(truth, p) for p in profiles])

    meas_vars = np.broadcast_to(np.asarray(scenario.meas_var, dtype=float), (n,))
    models = [
        build_cv_model(1, scenario.filter_dt, scenario.accel_var, mv)
        for mv in meas_vars
    ]
    pipe = make_pipeline(n, models, scenario.fusion_config(), scenario.init_var)

    T = scenario.frames
    experts = np.empty((n, T))
    w_m = np.empty((n, T))
    w_d = np.empty((n, T))
    rvv = np.empty((n, T))
    fused = np.empty(T)
    fused_var = np.empty(T)
    for t in range(T):
        est = pipe.step([sensors[i, t:t + 1] for i in range(n)])
        for i, (rep, per) in enumerate(zip(pipe.last_reports, est.per_detector)):
            experts[i, t] = rep.posterior.mean[0]
            w_m[i, t] = per.w_M
            w_d[i, t] = per.w_d
            rvv[i, t] = per.rvv_scale
        fused[t] = est.state.mean[0]
        fused_var[t] = est.state.cov[0, 0]

    return SimResult(
        frame=np.arange(T), truth=truth, sensors=sensors, experts=experts,
        w_m=w_m, w_d=w_d, rvv=rvv, fused=fused, fused_var=fused_var, seed=run_seed,
    )
