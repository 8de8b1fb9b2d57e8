"""Class scoring and losses on top of extracted features.

A raw (dot) score for class i is w_i . h + b_i. It factors into a magnitude
part (||w_i|| ||h|| + b_i) and an angle part cos(w_i, h); the cosine score
keeps only the angle, rescaled by a fixed gamma: gamma * cos(w_i, h). The
gradient of cos(w, h) with respect to w is

    h_hat = (h / ||h|| - cos(w, h) * w / ||w||) / ||w||

which is orthogonal to w and shrinks as ||w|| grows. The same expression
with the roles of w and h swapped is the gradient with respect to h. Norms
are floored at EPS_NORM so all-zero features or rows stay finite.

The replay loss mixes the two cross-entropies per sample:

    alpha * ce_dot + (1 - alpha) * ce_cos

and the endpoints alpha in {0, 1} reduce bitwise to the pure losses because
a zero-weighted branch is skipped rather than multiplied by zero.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .numeric import ShapeError, as_vector, require_finite

EPS_NORM = 1e-12


class LogitMode(enum.Enum):
    DOT = "dot"
    COSINE = "cosine"


@dataclass(frozen=True)
class CosineScale:
    gamma: float = 10.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")


@dataclass
class PredictorParams:
    """Append-only class rows: W is (classes, dim), b is (classes,)."""

    W: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.W.ndim != 2 or self.b.ndim != 1:
            raise ShapeError(f"predictor wants 2-d W and 1-d b, got {self.W.shape}, {self.b.shape}")
        if self.W.shape[0] != self.b.shape[0]:
            raise ShapeError(f"W has {self.W.shape[0]} rows but b has {self.b.shape[0]}")

    @classmethod
    def empty(cls, dim: int) -> "PredictorParams":
        return cls(np.zeros((0, dim)), np.zeros(0))

    @property
    def num_classes(self) -> int:
        return self.W.shape[0]

    @property
    def dim(self) -> int:
        return self.W.shape[1]

    def add_class(self, row: np.ndarray, bias: float = 0.0) -> int:
        row = as_vector(row)
        if row.shape[0] != self.dim:
            raise ShapeError(f"new row has dim {row.shape[0]}, predictor wants {self.dim}")
        self.W = np.vstack([self.W, row[None, :]])
        self.b = np.append(self.b, float(bias))
        return self.num_classes - 1

    def copy(self) -> "PredictorParams":
        return PredictorParams(self.W.copy(), self.b.copy())


def _check_features(pp: PredictorParams, h: np.ndarray) -> np.ndarray:
    h = as_vector(h)
    if h.shape[0] != pp.dim:
        raise ShapeError(f"feature dim {h.shape[0]} does not match predictor dim {pp.dim}")
    return h


def dot_logits(pp: PredictorParams, h: np.ndarray) -> np.ndarray:
    h = _check_features(pp, h)
    return pp.W @ h + pp.b


def cosine_logits(pp: PredictorParams, h: np.ndarray, scale: CosineScale) -> np.ndarray:
    h = _check_features(pp, h)
    hn = max(float(np.linalg.norm(h)), EPS_NORM)
    wn = np.maximum(np.linalg.norm(pp.W, axis=1), EPS_NORM)
    return scale.gamma * (pp.W @ h) / (wn * hn)


def dot_logits_batch(pp: PredictorParams, H: np.ndarray) -> np.ndarray:
    return H @ pp.W.T + pp.b


def cosine_logits_batch(pp: PredictorParams, H: np.ndarray, scale: CosineScale) -> np.ndarray:
    hn = np.maximum(np.linalg.norm(H, axis=1), EPS_NORM)
    wn = np.maximum(np.linalg.norm(pp.W, axis=1), EPS_NORM)
    return scale.gamma * (H @ pp.W.T) / (hn[:, None] * wn[None, :])


def softmax(logits: np.ndarray) -> np.ndarray:
    v = as_vector(logits)
    if v.shape[0] == 0:
        raise ValueError("softmax of an empty logit vector")
    e = np.exp(v - v.max())
    return e / e.sum()


def softmax_rows(L: np.ndarray) -> np.ndarray:
    e = np.exp(L - L.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(p: np.ndarray, y: int) -> float:
    p = as_vector(p)
    if not 0 <= y < p.shape[0]:
        raise IndexError(f"label {y} outside {p.shape[0]} classes")
    return float(-np.log(p[y]))


def _ce_rows(L: np.ndarray, rows: np.ndarray) -> np.ndarray:
    # stable -log softmax picked at the target row
    m = L.max(axis=1)
    lse = m + np.log(np.exp(L - m[:, None]).sum(axis=1))
    return lse - L[np.arange(L.shape[0]), rows]


def predictor_grad_dot(pp: PredictorParams, p: np.ndarray, h: np.ndarray, y: int,
                       tape, weight: float = 1.0) -> np.ndarray:
    """Accumulate d(ce_dot)/dW and d/db for one sample; return d(ce_dot)/dh."""
    h = _check_features(pp, h)
    g = np.asarray(p, dtype=np.float64).copy()
    g[y] -= 1.0
    g *= weight
    tape.pred_w += np.outer(g, h)
    tape.pred_b += g
    return g @ pp.W


def predictor_grad_cos(pp: PredictorParams, p: np.ndarray, h: np.ndarray,
                       scale: CosineScale, y: int, tape, weight: float = 1.0) -> np.ndarray:
    """Accumulate d(ce_cos)/dW for one sample; return d(ce_cos)/dh.

    Row j receives gamma * (p_j - [j == y]) * h_hat_j with h_hat_j the
    norm-scaled orthogonal direction documented at module top. The bias is
    untouched: cosine scores have no bias term.
    """
    h = _check_features(pp, h)
    hn = max(float(np.linalg.norm(h)), EPS_NORM)
    u = h / hn
    wn = np.maximum(np.linalg.norm(pp.W, axis=1), EPS_NORM)
    V = pp.W / wn[:, None]
    c = V @ u
    g = np.asarray(p, dtype=np.float64).copy()
    g[y] -= 1.0
    g *= scale.gamma * weight
    tape.pred_w += (g / wn)[:, None] * (u[None, :] - c[:, None] * V)
    return (V.T @ g - float(g @ c) * u) / hn


def _batch_targets(pp: PredictorParams, H: np.ndarray, rows) -> tuple[np.ndarray, np.ndarray]:
    H = np.asarray(H, dtype=np.float64)
    rows = np.asarray(rows, dtype=np.int64)
    if H.ndim != 2 or H.shape[0] == 0:
        raise ValueError(f"expected a non-empty (batch, dim) feature block, got shape {H.shape}")
    if rows.shape != (H.shape[0],):
        raise ShapeError(f"{H.shape[0]} samples but {rows.shape} labels")
    if H.shape[1] != pp.dim:
        raise ShapeError(f"feature dim {H.shape[1]} does not match predictor dim {pp.dim}")
    if rows.size and (rows.min() < 0 or rows.max() >= pp.num_classes):
        raise IndexError("label row outside registered classes")
    return H, rows


def loss_dot(pp: PredictorParams, H: np.ndarray, rows, tape=None,
             grad_weight: float = 1.0):
    """Mean dot-score cross-entropy over a batch.

    When a tape is given, gradients of (grad_weight * mean ce) are added to
    it and the matching d/dH block is returned; otherwise dH is None.
    """
    H, rows = _batch_targets(pp, H, rows)
    L = dot_logits_batch(pp, H)
    ce = _ce_rows(L, rows)
    loss = float(ce.mean())
    require_finite(np.asarray(loss), "dot cross-entropy")
    if tape is None:
        return loss, None
    D = softmax_rows(L)
    D[np.arange(len(rows)), rows] -= 1.0
    D *= grad_weight / len(rows)
    tape.pred_w += D.T @ H
    tape.pred_b += D.sum(axis=0)
    return loss, D @ pp.W


def loss_current(pp: PredictorParams, scale: CosineScale, H: np.ndarray, rows,
                 tape=None, grad_weight: float = 1.0):
    """Mean cosine-score cross-entropy over a batch (the new-sample loss)."""
    H, rows = _batch_targets(pp, H, rows)
    hn = np.maximum(np.linalg.norm(H, axis=1), EPS_NORM)
    wn = np.maximum(np.linalg.norm(pp.W, axis=1), EPS_NORM)
    U = H / hn[:, None]
    V = pp.W / wn[:, None]
    C = U @ V.T
    L = scale.gamma * C
    ce = _ce_rows(L, rows)
    loss = float(ce.mean())
    require_finite(np.asarray(loss), "cosine cross-entropy")
    if tape is None:
        return loss, None
    D = softmax_rows(L)
    D[np.arange(len(rows)), rows] -= 1.0
    D *= scale.gamma * grad_weight / len(rows)
    tape.pred_w += (D.T @ U - (D * C).sum(axis=0)[:, None] * V) / wn[:, None]
    dH = (D @ V - (D * C).sum(axis=1)[:, None] * U) / hn[:, None]
    return loss, dH


def loss_replay(pp: PredictorParams, scale: CosineScale, alpha: float,
                H: np.ndarray, rows, tape=None):
    """Replayed-sample loss: alpha * ce_dot + (1 - alpha) * ce_cos, batch mean."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha out of [0,1]: {alpha}")
    loss = 0.0
    dH = None
    if alpha > 0.0:
        ld, dd = loss_dot(pp, H, rows, tape, grad_weight=alpha)
        loss += alpha * ld
        dH = dd
    if alpha < 1.0:
        lc, dc = loss_current(pp, scale, H, rows, tape, grad_weight=1.0 - alpha)
        loss += (1.0 - alpha) * lc
        dH = dc if dH is None else dH + dc
    return loss, dH


def predict(pp: PredictorParams, h: np.ndarray) -> int:
    """Highest dot score wins; ties go to the lowest class index."""
    if pp.num_classes == 0:
        raise ValueError("predict with no registered classes")
    return int(np.argmax(dot_logits(pp, h)))


def predict_batch(pp: PredictorParams, H: np.ndarray, mode: LogitMode,
                  scale: CosineScale | None = None) -> np.ndarray:
    if pp.num_classes == 0:
        raise ValueError("predict with no registered classes")
    if mode is LogitMode.DOT:
        L = dot_logits_batch(pp, H)
    else:
        if scale is None:
            raise ValueError("cosine prediction needs a CosineScale")
        L = cosine_logits_batch(pp, H, scale)
    return np.argmax(L, axis=1)
