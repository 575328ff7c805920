"""ODE right-hand sides for self-attention token dynamics.

Token states are (L, D) arrays, one row per token. Right-hand sides are
pure: they never mutate X and depend on nothing but their arguments.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ContractError, DomainError, ShapeError
from .params import LambdaKind, ModelParams, interaction_matrix


class PosEncKind(Enum):
    NONE = "none"
    ABSOLUTE_SINUSOIDAL = "absolute_sinusoidal"
    ABSOLUTE_GIVEN = "absolute_given"
    ROTARY = "rotary"


@dataclass(frozen=True)
class PosEnc:
    kind: PosEncKind
    P: np.ndarray | None = None  # required for ABSOLUTE_GIVEN

    def __post_init__(self):
        if self.kind is PosEncKind.ABSOLUTE_GIVEN:
            if self.P is None:
                raise DomainError("absolute_given needs an explicit P matrix")
            object.__setattr__(self, "P", np.asarray(self.P, dtype=float))
        elif self.P is not None:
            raise DomainError(f"{self.kind.value} takes no P matrix")


def attention_weights(logits) -> np.ndarray:
    """Stable softmax of a logit vector (log-sum-exp shifted)."""
    z = np.asarray(logits, dtype=float)
    if z.ndim != 1:
        raise ShapeError("logits must be a vector")
    if not np.isfinite(z).all():
        raise ContractError("non-finite logits")
    e = np.exp(z - z.max())
    return e / e.sum()


def _softmax_rows(Z):
    if not np.isfinite(Z).all():
        raise ContractError("non-finite attention logits")
    E = np.exp(Z - Z.max(axis=1, keepdims=True))
    return E / E.sum(axis=1, keepdims=True)


def _check_state(params, X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ShapeError("token state must be a nonempty (L, D) array")
    if X.shape[1] != params.D:
        raise ShapeError(f"state dimension {X.shape[1]} != params.D {params.D}")
    return X


def rhs_vanilla(params: ModelParams, X) -> np.ndarray:
    """dx_l = V^T sum_i softmax_i(x_l^T W x_.) x_i with W = Q K^T / sqrt(Dk)."""
    X = _check_state(params, X)
    W = interaction_matrix(params)
    P = _softmax_rows(X @ W @ X.T)
    return (P @ X) @ params.V


def sinusoidal_encoding(L: int, D: int, offset: int = 0) -> np.ndarray:
    """Sinusoidal position table: sin(i * 10000^(-j/D)) on even feature
    columns, cos with the preceding even exponent on odd ones. Positions are
    zero-based; offset shifts the first position index."""
    if L < 1 or D < 1:
        raise DomainError("need L >= 1 and D >= 1")
    i = np.arange(offset, offset + L, dtype=float)[:, None]
    j = np.arange(D)
    expo = np.where(j % 2 == 0, j, j - 1) / D
    angles = i * 10000.0 ** (-expo)
    return np.where(j % 2 == 0, np.sin(angles), np.cos(angles))


def rhs_absolute(params: ModelParams, P, X) -> np.ndarray:
    """Absolute-positional-encoding dynamics; identical to the vanilla field
    evaluated at the shifted state X + P."""
    X = _check_state(params, X)
    P = np.asarray(P, dtype=float)
    if P.shape != X.shape:
        raise ShapeError(f"position matrix {P.shape} does not match state {X.shape}")
    return rhs_vanilla(params, X + P)


def rotation_matrix(D: int, theta_base: float, m) -> np.ndarray:
    """Block-diagonal rotary matrix: 2x2 rotations by m * theta_k with
    theta_k = theta_base^(-2(k-1)/D), k = 1..D/2."""
    if D % 2 != 0:
        raise DomainError("rotary rotations require even D")
    k = np.arange(D // 2)
    theta = float(m) * theta_base ** (-2.0 * k / D)
    c, s = np.cos(theta), np.sin(theta)
    R = np.zeros((D, D))
    R[2 * k, 2 * k] = c
    R[2 * k, 2 * k + 1] = -s
    R[2 * k + 1, 2 * k] = s
    R[2 * k + 1, 2 * k + 1] = c
    return R


def _require_rope(params):
    if params.rope is None:
        raise ContractError("rotary dynamics need rope parameters (Qbar, Kbar)")
    return params.rope


def _rope_offset_matrix(params: ModelParams, m: int) -> np.ndarray:
    rope = _require_rope(params)
    R = rotation_matrix(params.D, rope.theta_base, m)
    W = (params.Q @ params.K.T + np.asarray(rope.Qbar) @ R @ np.asarray(rope.Kbar).T) / np.sqrt(params.Dk)
    mod = rope.lambda_mod
    if mod is not None:
        if mod.kind is LambdaKind.IDENTITY_SCALED:
            W = W + mod.lam * np.eye(params.D)
        else:
            W = W + mod.lam * np.diag(mod.diag)
    return W


def rope_interaction(params: ModelParams, l: int, i: int) -> np.ndarray:
    """Pairwise query-key interaction matrix W_li under rotary encoding;
    depends on the positions only through the offset i - l."""
    return _rope_offset_matrix(params, i - l)


def rhs_rotary(params: ModelParams, X) -> np.ndarray:
    """Rotary dynamics: per-pair logits x_l^T W_{li} x_i, weights softmaxed
    over i, summand V^T x_i. Evaluated offset-by-offset (W_li depends only
    on i - l)."""
    X = _check_state(params, X)
    _require_rope(params)
    L = X.shape[0]
    Z = np.empty((L, L))
    for m in range(-(L - 1), L):
        Wm = _rope_offset_matrix(params, m)
        if m >= 0:
            rows = np.arange(0, L - m)
        else:
            rows = np.arange(-m, L)
        cols = rows + m
        Z[rows, cols] = np.einsum("ld,de,le->l", X[rows], Wm, X[cols])
    P = _softmax_rows(Z)
    return (P @ X) @ params.V


def rhs_for(params: ModelParams, posenc: PosEnc, L: int):
    """Bind a position encoding to params and return rhs(X) plus the
    absolute position table used (None for vanilla and rotary)."""
    if posenc.kind is PosEncKind.NONE:
        return (lambda X: rhs_vanilla(params, X)), None
    if posenc.kind is PosEncKind.ROTARY:
        _require_rope(params)
        return (lambda X: rhs_rotary(params, X)), None
    if posenc.kind is PosEncKind.ABSOLUTE_SINUSOIDAL:
        P = sinusoidal_encoding(L, params.D)
    else:
        P = posenc.P
        if P.shape != (L, params.D):
            raise ShapeError(f"given positions {P.shape} do not match (L, D) = ({L}, {params.D})")
    return (lambda X: rhs_absolute(params, P, X)), P
