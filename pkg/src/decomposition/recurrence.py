"""
Recurrent decomposition
C_i = D(F_{i-1}),  F_i = F_{i-1} - eta_i * R(C_i),  eta_i = |F_{i-1}| / |R(C_i)|
with (d_i, b_i) = P(C_i), plus reverse-mode differentiation through the recurrence
"""
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger
from scipy.special import expit

from ..errors import InvalidArgumentError, RescaleDegenerateError
from ..intensity.field import MixtureField
from .params import DecompParams

CENTER_LINKS = ("identity", "softplus")


@dataclass(frozen=True)
class FeatureImage:
    """Dense (H, W, F) feature map; norms are taken over the whole image"""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3:
            raise InvalidArgumentError(f"Feature image must be (H, W, F), got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise InvalidArgumentError("Feature image contains non-finite entries")
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def dim(self) -> int:
        return self.data.shape[2]

    def flat(self) -> np.ndarray:
        return self.data.reshape(-1, self.dim)

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))


@dataclass(frozen=True)
class ComponentMap:
    """Dense (H, W, C) component features extracted at one iteration"""

    data: np.ndarray

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def dim(self) -> int:
        return self.data.shape[2]


@dataclass
class DecompConfig:
    """
    Forward-pass options of the recurrence

    Args:
        center_link: 'identity' or 'softplus' map from raw predictor output to centers
        detach_eta: Treat eta as a constant in the backward pass
        allow_degenerate: Fall back to eta = 0 instead of raising when |R(C)| vanishes
        scale_clip_lo, scale_clip_hi: Projection range of the predicted scales
        degenerate_tol: Norm below which R(C) counts as zero
    """

    # Normalized depths are signed around the median, so centers need an unbounded link
    center_link: str = "identity"
    detach_eta: bool = False
    allow_degenerate: bool = False
    scale_clip_lo: float = 1.0
    scale_clip_hi: float = 10.0
    degenerate_tol: float = 1e-12

    def __post_init__(self):
        if self.center_link not in CENTER_LINKS:
            raise InvalidArgumentError(f"Unknown center_link '{self.center_link}', expected one of {CENTER_LINKS}")
        if not 0 < self.scale_clip_lo <= self.scale_clip_hi:
            raise InvalidArgumentError("Scale clip range must satisfy 0 < lo <= hi")


@dataclass
class StepRecord:
    x_prev: np.ndarray      # (P, F)
    comp: np.ndarray        # (P, C)
    remap: np.ndarray       # (P, F)
    raw: np.ndarray         # (P, 2)
    eta: float
    prev_norm: float
    remap_norm: float
    degenerate: bool = False


@dataclass
class Tape:
    params: DecompParams
    config: DecompConfig
    height: int
    width: int
    steps: List[StepRecord] = field(default_factory=list)


@dataclass
class RecurrenceOutput:
    """
    Result of run_recurrence

    Args:
        components: One ComponentMap per iteration
        centers, scales: (H, W, n) predicted Laplace parameters
        etas: Rescaling factor per iteration
        eta_residual: Largest relative deviation of |eta R(C)| from |F_prev|
        degenerate_iterations: 1-based iterations that used the eta = 0 fallback
        tape: Forward record for backward_recurrence
    """

    components: List[ComponentMap]
    centers: np.ndarray
    scales: np.ndarray
    etas: List[float]
    eta_residual: float
    degenerate_iterations: List[int]
    tape: Tape

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def steps(self) -> List[Tuple[ComponentMap, np.ndarray, np.ndarray]]:
        return [(c, self.centers[..., i], self.scales[..., i]) for i, c in enumerate(self.components)]

    def field(self) -> MixtureField:
        return MixtureField(self.centers, self.scales)


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def link_outputs(raw: np.ndarray, cfg: DecompConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Map raw predictor outputs (..., 2) to (center, scale)"""
    centers = raw[..., 0] if cfg.center_link == "identity" else _softplus(raw[..., 0])
    scales = np.clip(_softplus(raw[..., 1]), cfg.scale_clip_lo, cfg.scale_clip_hi)
    return centers, scales


def _link_backward(raw: np.ndarray, grad_c: np.ndarray, grad_b: np.ndarray, cfg: DecompConfig) -> np.ndarray:
    g = np.empty_like(raw)
    g[:, 0] = grad_c if cfg.center_link == "identity" else grad_c * expit(raw[:, 0])
    u = _softplus(raw[:, 1])
    inside = (u >= cfg.scale_clip_lo) & (u <= cfg.scale_clip_hi)
    g[:, 1] = np.where(inside, grad_b * expit(raw[:, 1]), 0.0)
    return g


def _forward_step(x_prev: np.ndarray, p: DecompParams, iteration: int,
                  cfg: DecompConfig) -> Tuple[StepRecord, np.ndarray]:
    comp = x_prev @ p.W_D.T + p.b_D
    remap = comp @ p.W_R.T + p.b_R
    prev_norm = float(np.linalg.norm(x_prev))
    remap_norm = float(np.linalg.norm(remap))
    degenerate = remap_norm < cfg.degenerate_tol
    if degenerate:
        if not cfg.allow_degenerate:
            raise RescaleDegenerateError(f"|R(C)| = {remap_norm:.3e} is below {cfg.degenerate_tol:.0e}",
                                         iteration + 1)
        logger.warning(f"⚠️ Degenerate remap at iteration {iteration + 1}, using eta = 0")
        eta = 0.0
    else:
        eta = prev_norm / remap_norm
    x_next = x_prev - eta * remap
    k = p.predictor_index(iteration)
    raw = comp @ p.W_P[k].T + p.b_P[k]
    return StepRecord(x_prev, comp, remap, raw, eta, prev_norm, remap_norm, degenerate), x_next


def decompose_step(f_prev: FeatureImage, p: DecompParams, iteration: int = 0,
                   cfg: Optional[DecompConfig] = None) -> Tuple[ComponentMap, FeatureImage, float]:
    """
    One residual-subtraction step

    Args:
        f_prev: Residual features F_{i-1}
        p: DecompParams
        iteration: 0-based iteration (selects the predictor, names errors)
        cfg: DecompConfig

    Returns:
        tuple: (C_i, F_i, eta_i) with |eta_i R(C_i)| = |F_{i-1}|

    Raises:
        RescaleDegenerateError: |R(C_i)| below tolerance and no fallback allowed
    """
    cfg = cfg or DecompConfig()
    if f_prev.dim != p.feature_dim:
        raise InvalidArgumentError(f"Feature dim {f_prev.dim} does not match params F={p.feature_dim}")
    h, w = f_prev.height, f_prev.width
    record, x_next = _forward_step(f_prev.flat(), p, iteration, cfg)
    return (ComponentMap(record.comp.reshape(h, w, -1)),
            FeatureImage(x_next.reshape(h, w, -1)),
            record.eta)


def run_recurrence(f0: FeatureImage, p: DecompParams, cfg: Optional[DecompConfig] = None) -> RecurrenceOutput:
    """
    Extract n components and predict a Laplace (d, b) map from each

    Args:
        f0: Input feature image
        p: DecompParams
        cfg: DecompConfig

    Returns:
        RecurrenceOutput: components, parameter maps and the forward tape
    """
    cfg = cfg or DecompConfig()
    if f0.dim != p.feature_dim:
        raise InvalidArgumentError(f"Feature dim {f0.dim} does not match params F={p.feature_dim}")
    h, w = f0.height, f0.width
    tape = Tape(p, cfg, h, w)
    x = f0.flat()
    components, centers, scales, etas, degenerate = [], [], [], [], []
    residual = 0.0
    for i in range(p.n):
        record, x = _forward_step(x, p, i, cfg)
        tape.steps.append(record)
        components.append(ComponentMap(record.comp.reshape(h, w, -1)))
        d, b = link_outputs(record.raw, cfg)
        centers.append(d.reshape(h, w))
        scales.append(b.reshape(h, w))
        etas.append(record.eta)
        if record.degenerate:
            degenerate.append(i + 1)
        elif record.prev_norm > 0:
            achieved = float(np.linalg.norm(record.eta * record.remap))
            residual = max(residual, abs(achieved - record.prev_norm) / record.prev_norm)
    return RecurrenceOutput(components, np.stack(centers, axis=-1), np.stack(scales, axis=-1),
                            etas, residual, degenerate, tape)


def backward_recurrence(tape: Optional[Tape], grad_centers: np.ndarray,
                        grad_scales: np.ndarray) -> dict:
    """
    Reverse-mode gradients of a loss w.r.t. every DecompParams array

    Args:
        tape: Forward record from run_recurrence
        grad_centers: (H, W, n) dLoss/d(center maps)
        grad_scales: (H, W, n) dLoss/d(scale maps)

    Returns:
        dict: parameter name -> gradient array
    """
    if tape is None or not tape.steps:
        raise InvalidArgumentError("backward_recurrence needs a recorded forward tape")
    p, cfg = tape.params, tape.config
    n = len(tape.steps)
    if grad_centers.shape[-1] != n or grad_scales.shape[-1] != n:
        raise InvalidArgumentError(f"Upstream gradients must carry {n} component maps")
    gc = grad_centers.reshape(-1, n)
    gb = grad_scales.reshape(-1, n)

    grads = p.zeros_like()
    g_x = np.zeros_like(tape.steps[0].x_prev)
    for i in range(n - 1, -1, -1):
        rec = tape.steps[i]
        # x_i = x_{i-1} - eta * q
        g_prev = g_x.copy()
        g_q = -rec.eta * g_x
        if not (rec.degenerate or cfg.detach_eta):
            g_eta = -float(np.sum(g_x * rec.remap))
            if rec.prev_norm > 0:
                g_prev += g_eta * rec.x_prev / (rec.prev_norm * rec.remap_norm)
            g_q -= g_eta * rec.prev_norm * rec.remap / rec.remap_norm ** 3

        grads["W_R"] += g_q.T @ rec.comp
        grads["b_R"] += g_q.sum(axis=0)
        g_comp = g_q @ p.W_R

        k = p.predictor_index(i)
        g_raw = _link_backward(rec.raw, gc[:, i], gb[:, i], cfg)
        grads["W_P"][k] += g_raw.T @ rec.comp
        grads["b_P"][k] += g_raw.sum(axis=0)
        g_comp += g_raw @ p.W_P[k]

        grads["W_D"] += g_comp.T @ rec.x_prev
        grads["b_D"] += g_comp.sum(axis=0)
        g_prev += g_comp @ p.W_D
        g_x = g_prev
    return grads
