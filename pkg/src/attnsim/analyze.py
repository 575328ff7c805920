"""Trajectory metrics and numerical theorem checkers.

Each checker consumes a recorded Trajectory and produces CheckResult
records (or SkippedCheck when its hypotheses fail). Margins are signed so
that "passed" always means worst_margin >= -tolerance, with tolerance
already folded into the margin for threshold-style checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import quadspace
from .errors import DomainError, HypothesisError, NoRealDominantError, SingularMatrixError
from .integrate import Termination, Trajectory
from .params import ModelParams, derive_W_A, interaction_matrix

CONVERGED_RATIO = 1e-3
DIVERGED_RATIO = 1e3
EXP_CLIP = 700.0  # keeps margins finite when q_W is very negative


class Direction(Enum):
    NON_DECREASING = "non_decreasing"
    NON_INCREASING = "non_increasing"


class Regime(Enum):
    CONVERGED = "converged"
    DIVERGED = "diverged"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst_margin: float
    location: float  # time of the worst margin
    asserted: bool = True  # report-only results do not gate exit status


@dataclass(frozen=True)
class SkippedCheck:
    name: str
    reason: str


@dataclass(frozen=True)
class VerificationReport:
    checks: list[CheckResult] = field(default_factory=list)
    skipped: list[SkippedCheck] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks if c.asserted)

    def to_text(self) -> str:
        lines = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            note = "" if c.asserted else " (report only)"
            lines.append(f"{status:4s} {c.name}: worst margin {c.worst_margin:+.6e} at t={c.location:.4f}{note}")
        for s in self.skipped:
            lines.append(f"SKIP {s.name}: {s.reason}")
        return "\n".join(lines)

    def to_records(self) -> list[str]:
        """One check per line: name, pass/fail/skip, margin, time."""
        recs = [
            f"{c.name},{'pass' if c.passed else 'fail'},{c.worst_margin:.17g},{c.location:.17g}"
            for c in self.checks
        ]
        recs += [f"{s.name},skip,,{s.reason}" for s in self.skipped]
        return recs


@dataclass(frozen=True)
class MetricSeries:
    times: np.ndarray
    mean_token_norm: np.ndarray
    mean_pairwise_dist: np.ndarray
    qa_pairwise: np.ndarray | None  # (samples, pairs), None when V is singular
    pairs: list[tuple[int, int]]


def _pair_diffs(X, iu):
    return X[iu[0]] - X[iu[1]]


def trajectory_metrics(traj: Trajectory, params: ModelParams) -> MetricSeries:
    """Per-sample mean token norm, mean pairwise Euclidean distance, and the
    per-pair q_A(x_i - x_j) series (omitted when V is singular)."""
    if traj.states.shape[0] == 0:
        raise DomainError("empty trajectory")
    L = traj.states.shape[1]
    iu = np.triu_indices(L, 1)
    try:
        _, A = derive_W_A(params)
    except SingularMatrixError:
        A = None
    norms = np.linalg.norm(traj.states, axis=2)
    mean_norm = norms.mean(axis=1)
    if L > 1:
        dists = np.array([np.linalg.norm(_pair_diffs(X, iu), axis=1).mean() for X in traj.states])
        qa = None
        if A is not None:
            qa = np.array([np.einsum("pd,de,pe->p", _pair_diffs(X, iu), A, _pair_diffs(X, iu)) for X in traj.states])
    else:
        dists = np.zeros(len(traj.times))
        qa = np.zeros((len(traj.times), 0)) if A is not None else None
    return MetricSeries(
        times=traj.times,
        mean_token_norm=mean_norm,
        mean_pairwise_dist=dists,
        qa_pairwise=qa,
        pairs=list(zip(*iu)),
    )


def check_distance_monotonicity(traj: Trajectory, A, direction: Direction, tol: float, asserted: bool = True) -> CheckResult:
    """Step-wise monotonicity of squared A-distances between token pairs.

    The monitored quantity is q_A(x_i - x_j) when sym(A) is not negative
    definite and -q_A (the squared A-norm) when it is, so the stated
    direction always refers to the distance the theorem speaks about.
    Vacuously passes with margin 0 when there are no pairs.
    """
    A = np.asarray(A, dtype=float)
    L = traj.states.shape[1]
    name = f"distance_monotonicity_{direction.value}"
    if L < 2:
        return CheckResult(name, True, 0.0, float(traj.times[0]), asserted)
    iu = np.triu_indices(L, 1)
    series = np.array([np.einsum("pd,de,pe->p", _pair_diffs(X, iu), A, _pair_diffs(X, iu)) for X in traj.states])
    if quadspace.classify_definiteness(A) is quadspace.Definiteness.NEGATIVE_DEFINITE:
        series = -series
    steps = np.diff(series, axis=0)
    margins = steps if direction is Direction.NON_DECREASING else -steps
    k, p = np.unravel_index(np.argmin(margins), margins.shape)
    worst = float(margins[k, p])
    return CheckResult(name, worst >= -tol, worst, float(traj.times[k + 1]), asserted)


def check_quadratic_form_bounds(
    traj: Trajectory,
    params: ModelParams,
    tol_differential: float | None = None,
    tol_envelope: float = 1e-4,
    asserted: bool = True,
) -> list[CheckResult | SkippedCheck]:
    """Differential inequality d/dt q_A >= 2 - 2L e^{-q_W} at interior
    samples (central differences), plus the closed-form decay envelope on
    the squared A-norm when A < 0 and W_sym > 0.

    Requires symmetric A; otherwise the whole check is reported skipped.
    The default differential tolerance is 10 h^3 for the median sample
    spacing h (finite-difference error budget).
    """
    try:
        W, A = derive_W_A(params)
    except SingularMatrixError:
        return [SkippedCheck("qa_bounds", "V is singular; A is undefined")]
    scale = max(1.0, np.abs(A).max())
    if np.abs(A - A.T).max() > 1e-8 * scale:
        return [SkippedCheck("qa_bounds", "A is not symmetric; proposition hypothesis fails")]
    t = traj.times
    if len(t) < 3:
        return [SkippedCheck("qa_bounds", "need at least 3 samples for central differences")]
    L = traj.states.shape[1]
    qA = np.array([np.einsum("ld,de,le->l", X, A, X) for X in traj.states])
    qW = np.array([np.einsum("ld,de,le->l", X, W, X) for X in traj.states])

    if tol_differential is None:
        h = float(np.median(np.diff(t)))
        tol_differential = 10.0 * h**3
    dq = (qA[2:] - qA[:-2]) / (t[2:, None] - t[:-2, None])
    bound = 2.0 - 2.0 * L * np.exp(np.clip(-qW[1:-1], None, EXP_CLIP))
    margins = dq - bound
    k, l = np.unravel_index(np.argmin(margins), margins.shape)
    worst = float(margins[k, l])
    results: list[CheckResult | SkippedCheck] = [
        CheckResult("qa_rate_lower_bound", worst >= -tol_differential, worst, float(t[k + 1]), asserted)
    ]

    a_kind = quadspace.classify_definiteness(A)
    w_kind = quadspace.classify_definiteness(quadspace.sym(W))
    if a_kind is quadspace.Definiteness.NEGATIVE_DEFINITE and w_kind is quadspace.Definiteness.POSITIVE_DEFINITE:
        c = float(np.linalg.eigvalsh(quadspace.sym(W)).min() / np.linalg.eigvalsh(-quadspace.sym(A)).max())
        na = -qA  # squared A-norm, A < 0
        inner = np.exp(-2.0 * c * t)[:, None] * (np.exp(np.clip(c * na[0], None, EXP_CLIP))[None, :] - L) + L
        env = np.log(inner) / c
        margins_env = env - na
        k, l = np.unravel_index(np.argmin(margins_env), margins_env.shape)
        worst_env = float(margins_env[k, l])
        results.append(CheckResult("qa_decay_envelope", worst_env >= -tol_envelope, worst_env, float(t[k]), asserted))
    else:
        results.append(SkippedCheck("qa_decay_envelope", f"needs A < 0 and W_sym > 0 (got A {a_kind.value}, W_sym {w_kind.value})"))
    return results


def check_convergence(traj: Trajectory, rel_threshold: float, asserted: bool = True) -> CheckResult:
    """max_l ||x_l(T)|| <= rel_threshold * max_l ||x_l(0)||."""
    start = float(np.linalg.norm(traj.initial, axis=1).max())
    end = float(np.linalg.norm(traj.final, axis=1).max())
    margin = rel_threshold * start - end
    return CheckResult("norm_collapse", margin >= 0.0, margin, float(traj.times[-1]), asserted)


def check_divergence_projection(
    traj: Trajectory, V, n, eigenvalue: float, tol: float, asserted: bool = True
) -> list[CheckResult]:
    """Invariant-projection bounds of the divergence theorem.

    Checks min_i n.x_i(0) - tol <= n^T e^{-tV^T} x_l(t) <= max_i + tol at
    every sample. When the initial projections are strictly one-sided and V
    has only positive eigenvalues, additionally reports whether the run
    exceeded the blow-up guard (the norm-divergence consequence).
    """
    V = np.asarray(V, dtype=float)
    n = np.asarray(n, dtype=float)
    n_norm = np.linalg.norm(n)
    if n_norm == 0 or np.linalg.norm(V @ n - eigenvalue * n) > 1e-8 * n_norm:
        raise HypothesisError("n is not an eigenvector of V for the given eigenvalue")
    if eigenvalue <= 0:
        raise HypothesisError("the projection bound needs a positive eigenvalue")

    y0 = traj.initial @ n
    lo, hi = float(y0.min()), float(y0.max())
    worst, loc = np.inf, float(traj.times[0])
    for t, X in zip(traj.times, traj.states):
        y = X @ (quadspace.matexp(-t * V) @ n)
        m = min(float((y - lo).min()), float((hi - y).min()))
        if m < worst:
            worst, loc = m, float(t)
    results = [CheckResult("projection_band", worst >= -tol, worst, loc, asserted)]

    eigs = np.linalg.eigvals(V)
    one_sided = lo > 1e-8 or hi < -1e-8
    positive_spectrum = np.abs(eigs.imag).max() <= 1e-8 * max(1.0, np.abs(eigs).max()) and eigs.real.min() > 0
    if one_sided and positive_spectrum:
        final_max = float(np.linalg.norm(traj.final, axis=1).max())
        margin = final_max - traj.config.blowup_norm
        results.append(
            CheckResult("norm_divergence", traj.terminated is Termination.BLOW_UP or margin > 0, margin, float(traj.times[-1]), asserted)
        )
    return results


def check_hull_containment(traj: Trajectory, V, lam: float, tol: float, asserted: bool = True) -> CheckResult:
    """e^{-lam t} x_l(t) stays in the convex hull of the initial tokens;
    requires V = lam I with lam > 0."""
    V = np.asarray(V, dtype=float)
    D = V.shape[0]
    if lam <= 0:
        raise HypothesisError("hull containment needs lam > 0")
    if np.abs(V - lam * np.eye(D)).max() > 1e-10:
        raise HypothesisError("hull containment needs V = lam * I")
    X0 = traj.initial
    worst, loc = np.inf, float(traj.times[0])
    for t, X in zip(traj.times, traj.states):
        Z = np.exp(-lam * t) * X
        for z in Z:
            dist, _ = quadspace.simplex_distance(X0, z, tol=tol)
            margin = tol - dist
            if margin < worst:
                worst, loc = float(margin), float(t)
    return CheckResult("rescaled_hull_containment", worst >= 0.0, worst, loc, asserted)


def stationarity_residual(params: ModelParams, X) -> float:
    """max_l || sum_j e^{x_l^T W x_j} x_j ||; zero exactly at the all-zero
    stationary state."""
    X = np.asarray(X, dtype=float)
    W = interaction_matrix(params)
    E = np.exp(X @ W @ X.T)
    return float(np.linalg.norm(E @ X, axis=1).max())


def check_stationarity(traj: Trajectory, params: ModelParams, tol: float, asserted: bool = True) -> CheckResult:
    residual = stationarity_residual(params, traj.final)
    return CheckResult("stationarity_residual", residual <= tol, tol - residual, float(traj.times[-1]), asserted)


def check_absolute_limit(traj: Trajectory, P, tol: float, asserted: bool = True) -> CheckResult:
    """max_l ||x_l(T) + p_l|| <= tol (limit of the absolute-PE dynamics)."""
    P = np.asarray(P, dtype=float)
    dev = float(np.linalg.norm(traj.final + P, axis=1).max())
    return CheckResult("absolute_position_limit", dev <= tol, tol - dev, float(traj.times[-1]), asserted)


def check_derivative_decay(traj: Trajectory, tol: float, asserted: bool = True) -> CheckResult:
    """Finite-difference token velocity over the last recorded step."""
    if len(traj.times) < 2:
        raise DomainError("need at least two samples")
    dt = float(traj.times[-1] - traj.times[-2])
    vel = float(np.linalg.norm(traj.states[-1] - traj.states[-2], axis=1).max() / dt)
    return CheckResult("velocity_decay", vel <= tol, tol - vel, float(traj.times[-1]), asserted)


def classify_regime(traj: Trajectory) -> Regime:
    """Converged / Diverged / Undecided from mean token norms (and the
    blow-up flag)."""
    if traj.terminated is Termination.BLOW_UP:
        return Regime.DIVERGED
    start = float(np.linalg.norm(traj.initial, axis=1).mean())
    end = float(np.linalg.norm(traj.final, axis=1).mean())
    if end < CONVERGED_RATIO * start:
        return Regime.CONVERGED
    if end > DIVERGED_RATIO * start:
        return Regime.DIVERGED
    return Regime.UNDECIDED


def dominant_eigenvector(V, tol: float = 1e-8):
    """Real dominant eigenpair of a square matrix.

    Raises NoRealDominantError when the largest-modulus eigenvalue is part
    of a complex pair (relative imaginary part above tol).
    """
    V = np.asarray(V, dtype=float)
    values, vectors = np.linalg.eig(V)
    idx = int(np.argmax(np.abs(values)))
    lam = values[idx]
    if abs(lam.imag) > tol * max(1.0, abs(lam)):
        raise NoRealDominantError(f"dominant eigenvalue {lam:.6g} is complex")
    v = vectors[:, idx]
    j = int(np.argmax(np.abs(v)))
    v = v * np.conj(v[j]) / abs(v[j])  # rotate the phase so v is real
    vr = np.real(v)
    vr = vr / np.linalg.norm(vr)
    lam_r = float(lam.real)
    if np.linalg.norm(V @ vr - lam_r * vr) > max(tol, 1e-8) * max(1.0, abs(lam_r)):
        raise NoRealDominantError("no real eigenvector for the dominant eigenvalue")
    return lam_r, vr


def positive_eigenpair(V, tol: float = 1e-8):
    """A (eigenvalue, unit eigenvector) pair of V with positive eigenvalue,
    for the divergence-projection check. Symmetric V goes through the exact
    symmetric solver; otherwise the dominant pair is used if positive."""
    V = np.asarray(V, dtype=float)
    if np.abs(V - V.T).max() <= 1e-10 * max(1.0, np.abs(V).max()):
        eig = quadspace.eig_sym(quadspace.sym(V))
        lam = float(eig.values[-1])
        if lam <= 0:
            raise HypothesisError("V has no positive eigenvalue")
        return lam, eig.vectors[:, -1]
    lam, v = dominant_eigenvector(V, tol=tol)
    if lam <= 0:
        raise HypothesisError("dominant eigenvalue of V is not positive")
    return lam, v
