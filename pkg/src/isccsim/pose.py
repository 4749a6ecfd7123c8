"""Point-cloud pose pipeline: sampling/grouping, state-space forward pass,
error metrics, and the calibrated accuracy surrogate used by the optimizer."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar, nnls

from .errors import CalibrationError
from .sensing import PointCloudFrame, SensingBeam, SensingParams, crb_range_variance, echo_snr
from .arrays import BeamDirection


@dataclass(frozen=True)
class SkeletonFrame:
    """Ground-truth joint positions for one frame, meters, shape (n_joints, 3)."""

    joints: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.joints.ndim != 2 or self.joints.shape[1] != 3:
            raise ValueError("joints must have shape (n, 3)")


@dataclass(frozen=True)
class Clip:
    """A training window: consecutive point-cloud frames plus the next-frame target."""

    frames: tuple[PointCloudFrame, ...]
    target: SkeletonFrame

    def __post_init__(self):
        if len(self.frames) == 0:
            raise ValueError("a clip needs at least one frame")
        indices = [f.frame_index for f in self.frames]
        if any(b - a != 1 for a, b in zip(indices, indices[1:])):
            raise ValueError(f"clip frame indices must be consecutive, got {indices}")


def fps(points: np.ndarray, n_centers: int, start_index: int = 0) -> np.ndarray:
    """Farthest point sampling.

    Greedy max-min: starting from start_index, each new center maximizes the
    minimum Euclidean distance to the centers chosen so far; distance ties
    resolve to the smallest index.

    Returns the selected indices in selection order.
    """
    pts = np.asarray(points, dtype=float)
    n = pts.shape[0]
    if pts.ndim != 2:
        raise ValueError("points must be 2-D")
    if not (1 <= n_centers <= n):
        raise ValueError(f"n_centers must be in [1, {n}], got {n_centers}")
    if not (0 <= start_index < n):
        raise ValueError(f"start_index {start_index} out of range")
    selected = np.empty(n_centers, dtype=int)
    selected[0] = start_index
    min_d2 = np.sum((pts - pts[start_index]) ** 2, axis=1)
    min_d2[start_index] = -1.0  # selected points never win again
    for i in range(1, n_centers):
        nxt = int(np.argmax(min_d2))  # first maximum: smallest index on ties
        selected[i] = nxt
        d2 = np.sum((pts - pts[nxt]) ** 2, axis=1)
        np.minimum(min_d2, d2, out=min_d2)
        min_d2[nxt] = -1.0
    return selected


def knn_group(points: np.ndarray, centers: Sequence[int], k: int) -> list[np.ndarray]:
    """k nearest point indices per center (center included).

    Each group is sorted by distance to the center, ties by index.
    """
    pts = np.asarray(points, dtype=float)
    n = pts.shape[0]
    if not (1 <= k <= n):
        raise ValueError(f"k must be in [1, {n}], got {k}")
    groups = []
    order_idx = np.arange(n)
    for c in centers:
        if not (0 <= c < n):
            raise ValueError(f"center index {c} out of range")
        d2 = np.sum((pts - pts[c]) ** 2, axis=1)
        order = np.lexsort((order_idx, d2))
        groups.append(order[:k].copy())
    return groups


def normalize_group(points: np.ndarray, group: np.ndarray, center_index: int) -> np.ndarray:
    """Express a group's points relative to its center."""
    pts = np.asarray(points, dtype=float)
    group = np.asarray(group, dtype=int)
    if center_index not in group:
        raise ValueError(f"center {center_index} is not a member of its group")
    return pts[group] - pts[center_index]


def serialize_frame(groups: Sequence[np.ndarray]) -> np.ndarray:
    """Flatten normalized groups to one feature vector.

    Groups concatenate in the order given (selection order), each point as
    (x, y, z); the result has length 3 * sum(group sizes).
    """
    if len(groups) == 0:
        raise ValueError("cannot serialize an empty group list")
    return np.concatenate([np.asarray(g, dtype=float).reshape(-1) for g in groups])


@dataclass(frozen=True)
class SSMParams:
    """Discrete state-space operator: h' = A h + B x, y = C h' + D x."""

    a_bar: np.ndarray = field(repr=False)
    b_bar: np.ndarray = field(repr=False)
    c_bar: np.ndarray = field(repr=False)
    d_mat: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.a_bar.shape[0]
        if self.a_bar.shape != (n, n):
            raise ValueError("a_bar must be square")
        if self.b_bar.shape[0] != n:
            raise ValueError("b_bar rows must match the state dimension")
        if self.c_bar.shape[1] != n:
            raise ValueError("c_bar columns must match the state dimension")
        if self.d_mat.shape != (self.c_bar.shape[0], self.b_bar.shape[1]):
            raise ValueError("d_mat must map inputs to outputs")

    @property
    def state_dim(self) -> int:
        return self.a_bar.shape[0]


def ssm_forward(params: SSMParams, inputs: np.ndarray, h0: np.ndarray | None = None) -> np.ndarray:
    """Run the state recurrence over a sequence.

    inputs has shape (steps, input_dim); returns (steps, output_dim).
    """
    x = np.asarray(inputs, dtype=float)
    if x.ndim != 2 or x.shape[1] != params.b_bar.shape[1]:
        raise ValueError(f"inputs must have shape (steps, {params.b_bar.shape[1]})")
    h = np.zeros(params.state_dim) if h0 is None else np.asarray(h0, dtype=float).copy()
    if h.shape != (params.state_dim,):
        raise ValueError("h0 must match the state dimension")
    outputs = np.empty((x.shape[0], params.c_bar.shape[0]))
    for b in range(x.shape[0]):
        h = params.a_bar @ h + params.b_bar @ x[b]
        outputs[b] = params.c_bar @ h + params.d_mat @ x[b]
    return outputs


def sliding_windows(trace_length: int, t_w: int, stride: int = 1) -> list[tuple[int, int]]:
    """Window starts for next-frame prediction.

    Emits (start, start + t_w) for start = 0, stride, ... while one frame
    remains after the window to serve as the target, i.e. while
    start + t_w <= trace_length - 1.
    """
    if t_w < 1 or stride < 1:
        raise ValueError("window length and stride must be positive")
    if t_w > trace_length:
        raise ValueError(f"window length {t_w} exceeds trace length {trace_length}")
    return [(s, s + t_w) for s in range(0, trace_length - t_w, stride)]


def make_clips(
    frames: Sequence[PointCloudFrame],
    skeletons: Sequence[SkeletonFrame],
    t_w: int,
    stride: int = 1,
) -> list[Clip]:
    """Cut a synchronized trace into next-frame prediction clips."""
    if len(frames) != len(skeletons):
        raise ValueError("point-cloud and skeleton traces must have equal length")
    clips = []
    for start, end in sliding_windows(len(frames), t_w, stride):
        clips.append(Clip(frames=tuple(frames[start:end]), target=skeletons[end]))
    return clips


def _stack_joints(frames) -> np.ndarray:
    if isinstance(frames, np.ndarray):
        arr = np.asarray(frames, dtype=float)
    else:
        arr = np.stack([np.asarray(f.joints, dtype=float) for f in frames])
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[-1] != 3:
        raise ValueError("expected joint arrays of shape (frames, joints, 3)")
    return arr


def mpjpe(predicted, truth) -> float:
    """Mean per-joint position error in centimeters.

    Accepts SkeletonFrame sequences or raw (frames, joints, 3) arrays in
    meters; averages the Euclidean joint error over all frames and joints.
    """
    p = _stack_joints(predicted)
    t = _stack_joints(truth)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {t.shape}")
    return float(np.mean(np.linalg.norm(p - t, axis=-1))) * 100.0


def mse_loss(predicted, truth) -> float:
    """Mean squared joint error in squared meters: sum ||e||^2 / (frames * joints)."""
    p = _stack_joints(predicted)
    t = _stack_joints(truth)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {t.shape}")
    return float(np.sum((p - t) ** 2) / (p.shape[0] * p.shape[1]))


@dataclass(frozen=True)
class SurrogateModel:
    """Closed-form stand-in for trained-network accuracy.

    Error in cm as a function of sensing power and network depth:
    a depth floor that decays geometrically plus a jitter term proportional
    to the range CRB standard deviation at the reference distance.
    """

    floor_a: float
    floor_b: float
    floor_rho: float
    jitter_kappa: float
    reference_distance: float = 3.0
    sensing: SensingParams = SensingParams()

    def __post_init__(self):
        if not (self.floor_a > 0):
            raise ValueError("floor_a must be positive")
        if self.floor_b < 0:
            raise ValueError("floor_b must be nonnegative")
        if not (0.0 < self.floor_rho < 1.0):
            raise ValueError("floor_rho must lie in (0, 1)")
        if self.jitter_kappa < 0:
            raise ValueError("jitter_kappa must be nonnegative")
        if not (self.reference_distance > 0):
            raise ValueError("reference distance must be positive")


def _reference_beam(model: SurrogateModel) -> SensingBeam:
    return SensingBeam(BeamDirection(0.0, 0.0), model.reference_distance)


def jitter_std_cm(model: SurrogateModel, p_r: float) -> float:
    """Range CRB standard deviation at the reference distance, centimeters."""
    snr = echo_snr(p_r, _reference_beam(model), model.sensing)
    return 100.0 * math.sqrt(crb_range_variance(snr, model.sensing))


def surrogate_mpjpe(model: SurrogateModel, p_r: float, depth: int) -> float:
    """Predicted MPJPE in cm at a sensing power and network depth.

    Strictly decreasing in both arguments (for positive jitter_kappa); the
    infimum over p_r is the depth floor floor_a + floor_b * rho^depth.
    """
    if not (p_r > 0):
        raise ValueError("sensing power must be positive")
    if depth < 1:
        raise ValueError(f"network depth must be at least 1, got {depth}")
    floor = model.floor_a + model.floor_b * model.floor_rho**depth
    return floor + model.jitter_kappa * jitter_std_cm(model, p_r)


def calibrate_surrogate(
    targets: Sequence[tuple[float, int, float]],
    sensing: SensingParams = SensingParams(),
    reference_distance: float = 3.0,
) -> SurrogateModel:
    """Fit surrogate parameters to (p_r_w, depth, mpjpe_cm) targets.

    Least squares with the structure held fixed: for a candidate decay rho
    the model is linear in (floor_a, floor_b, jitter_kappa), solved by
    nonnegative least squares; rho itself is found by scanning (0, 1) and
    polishing the best bracket. Deterministic for given targets.

    Raises:
        CalibrationError: fewer than 4 targets, fewer than 2 distinct depths
            or powers, or a fit that drives floor_a to zero.
    """
    rows = [(float(p), int(l), float(y)) for p, l, y in targets]
    if len(rows) < 4:
        raise CalibrationError(f"need at least 4 calibration targets, got {len(rows)}")
    powers = np.array([r[0] for r in rows])
    depths = np.array([r[1] for r in rows])
    values = np.array([r[2] for r in rows])
    if np.unique(depths).size < 2:
        raise CalibrationError("calibration targets must span at least 2 depths")
    if np.unique(powers).size < 2:
        raise CalibrationError("calibration targets must span at least 2 powers")
    if np.any(powers <= 0) or np.any(depths < 1):
        raise CalibrationError("calibration targets need positive power and depth >= 1")

    probe = SurrogateModel(
        floor_a=1.0, floor_b=0.0, floor_rho=0.5, jitter_kappa=0.0,
        reference_distance=reference_distance, sensing=sensing,
    )
    jitter = np.array([jitter_std_cm(probe, p) for p in powers])

    def residual(rho: float) -> tuple[float, np.ndarray]:
        design = np.column_stack([np.ones_like(values), rho**depths, jitter])
        coef, rnorm = nnls(design, values)
        return rnorm, coef

    lo, hi = 1e-6, 1.0 - 1e-6
    grid = np.linspace(lo, hi, 512)
    losses = np.array([residual(r)[0] for r in grid])
    best = int(np.argmin(losses))
    bracket_lo = grid[max(best - 1, 0)]
    bracket_hi = grid[min(best + 1, grid.size - 1)]
    refined = minimize_scalar(
        lambda r: residual(r)[0] ** 2,
        bounds=(bracket_lo, bracket_hi),
        method="bounded",
        options={"xatol": 1e-14, "maxiter": 500},
    )
    rho = float(min(max(refined.x, lo), hi))
    _, coef = residual(rho)
    floor_a, floor_b, kappa = (float(c) for c in coef)
    if floor_a <= 0:
        raise CalibrationError("calibration drove the error floor to zero; targets are degenerate")
    return SurrogateModel(
        floor_a=floor_a, floor_b=floor_b, floor_rho=rho, jitter_kappa=kappa,
        reference_distance=reference_distance, sensing=sensing,
    )
