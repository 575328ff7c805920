"""Fixed-step RK4 integration with trajectory recording and blow-up guard."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import BlowUpSignal, DomainError, IntegrationError

DEFAULT_BLOWUP_NORM = 1e8


class Termination(Enum):
    HORIZON_REACHED = "horizon_reached"
    BLOW_UP = "blow_up"


@dataclass(frozen=True)
class IntegratorConfig:
    h: float = 1e-2
    T: float = 10.0
    record_stride: int = 1
    blowup_norm: float = DEFAULT_BLOWUP_NORM

    def __post_init__(self):
        if self.h <= 0:
            raise DomainError("step size must be positive")
        if self.T < self.h:
            raise DomainError("horizon must be at least one step")
        if self.record_stride < 1:
            raise DomainError("record_stride must be >= 1")
        if self.blowup_norm <= 0:
            raise DomainError("blowup_norm must be positive")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.T / self.h)))


@dataclass(frozen=True)
class Trajectory:
    """Recorded samples of one integration run.

    times is (N,), states is (N, L, D); sample 0 is the initial state and
    the final sample is always recorded. On blow-up the final sample is the
    first state whose max token norm exceeded the guard.
    """

    times: np.ndarray
    states: np.ndarray
    terminated: Termination
    config: IntegratorConfig
    blowup_time: float | None = None

    @property
    def initial(self) -> np.ndarray:
        return self.states[0]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def rk4_step(rhs, X, t: float, h: float) -> np.ndarray:
    """One classical Runge-Kutta step. rhs(t, X) -> dX; autonomous systems
    are free to ignore t."""
    k1 = rhs(t, X)
    k2 = rhs(t + 0.5 * h, X + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, X + 0.5 * h * k2)
    k4 = rhs(t + h, X + h * k3)
    out = X + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.isfinite(out).all():
        raise BlowUpSignal(f"non-finite stage at t={t:.6g}")
    return out


def integrate(rhs, X0, config: IntegratorConfig) -> Trajectory:
    """Integrate rhs from X0 over [0, T] in fixed steps of h.

    Records every record_stride-th sample plus t=0 and the final state;
    stops early with BLOW_UP once any token's Euclidean norm exceeds
    config.blowup_norm. rhs errors propagate wrapped with the failure time.
    """
    X = np.array(X0, dtype=float)
    if X.ndim != 2:
        raise DomainError("initial state must be an (L, D) array")
    times = [0.0]
    states = [X.copy()]
    n = config.n_steps
    for k in range(n):
        t = k * config.h
        try:
            X = rk4_step(rhs, X, t, config.h)
        except BlowUpSignal:
            # degenerate path: with stabilized softmax logits the norm
            # guard below fires long before any stage overflows
            return Trajectory(
                times=np.array(times),
                states=np.array(states),
                terminated=Termination.BLOW_UP,
                config=config,
                blowup_time=t,
            )
        except IntegrationError:
            raise
        except Exception as exc:
            raise IntegrationError(f"rhs evaluation failed at t={t:.6g}") from exc
        t_next = (k + 1) * config.h
        if np.linalg.norm(X, axis=1).max() > config.blowup_norm:
            times.append(t_next)
            states.append(X.copy())
            return Trajectory(
                times=np.array(times),
                states=np.array(states),
                terminated=Termination.BLOW_UP,
                config=config,
                blowup_time=t_next,
            )
        if (k + 1) % config.record_stride == 0 or k == n - 1:
            times.append(t_next)
            states.append(X.copy())
    return Trajectory(
        times=np.array(times),
        states=np.array(states),
        terminated=Termination.HORIZON_REACHED,
        config=config,
    )


def stable_step(V, cap: float = 1e-2, margin: float = 0.5) -> float:
    """Step size keeping RK4 stable for the mean-mode linearization
    dx = V^T x: h <= margin / rho(V). Returns min(cap, that bound)."""
    rho = float(np.abs(np.linalg.eigvals(np.asarray(V, dtype=float))).max())
    if rho == 0.0:
        return cap
    return min(cap, margin / rho)
