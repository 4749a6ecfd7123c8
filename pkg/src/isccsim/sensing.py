"""Monostatic sensing model: echo SNR, range CRB, and synthesis of jittered
point clouds from skeleton joints via a beam codebook."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arrays import BeamDirection, Codebook

# Joints closer to the AP than this are treated as degenerate geometry.
_MIN_JOINT_DISTANCE = 1e-9


@dataclass(frozen=True)
class SensingParams:
    """Echo-channel constants.

    rcs_zeta is the combined reflection coefficient; speed_of_light defaults
    to 3e8 m/s to keep range-resolution numbers consistent with the
    bandwidth convention used throughout.
    """

    rcs_zeta: float = 1.0
    noise_power: float = 1e-6
    bandwidth: float = 0.5e9
    speed_of_light: float = 3.0e8

    def __post_init__(self):
        for name in ("rcs_zeta", "noise_power", "bandwidth", "speed_of_light"):
            if not (getattr(self, name) > 0):
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class SensingBeam:
    """One scanned beam: pointing direction and target distance in meters."""

    direction: BeamDirection
    distance: float

    def __post_init__(self):
        if not (self.distance > 0):
            raise ValueError("beam target distance must be positive")


@dataclass(frozen=True)
class PointCloudFrame:
    """Sensed points for one frame, AP-centered coordinates.

    points has shape (n_points, 3); source_beam_index maps each point to the
    codebook beam that produced it.
    """

    points: np.ndarray = field(repr=False)
    source_beam_index: np.ndarray = field(repr=False)
    frame_index: int = 0

    def __post_init__(self):
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise ValueError("points must have shape (n, 3)")
        if self.source_beam_index.shape != (self.points.shape[0],):
            raise ValueError("one source beam index per point required")
        if self.frame_index < 0:
            raise ValueError("frame index must be nonnegative")

    @property
    def n_points(self) -> int:
        return self.points.shape[0]


def echo_snr(p_r: float, beam: SensingBeam, params: SensingParams) -> float:
    """Round-trip echo SNR: zeta^2 * p_r / (4 * d^4 * noise)."""
    if p_r < 0:
        raise ValueError("sensing power must be nonnegative")
    d = beam.distance
    return params.rcs_zeta**2 * p_r / (4.0 * d**4 * params.noise_power)


def scale_snr_to_beam(snr_o: float, d_o: float, d_p: float) -> float:
    """Rescale a reference-range SNR to another range: snr_o * (d_o/d_p)^4."""
    if not (d_o > 0 and d_p > 0):
        raise ValueError("distances must be positive")
    if snr_o < 0:
        raise ValueError("reference SNR must be nonnegative")
    return snr_o * (d_o / d_p) ** 4


def crb_range_variance(snr: float, params: SensingParams) -> float:
    """Range-estimate variance floor: c^2 / (8 pi^2 snr B^2), in m^2."""
    if not (snr > 0):
        raise ValueError("echo SNR must be positive for a finite range variance")
    return params.speed_of_light**2 / (8.0 * math.pi**2 * snr * params.bandwidth**2)


def sample_range(
    beam: SensingBeam,
    variance: float,
    rng: np.random.Generator,
    min_range: float = 0.01,
) -> float:
    """Draw one noisy range: true distance plus zero-mean Gaussian jitter.

    Results below min_range clamp to it so a pathological draw cannot place
    the point behind the array.
    """
    if variance < 0:
        raise ValueError("range variance must be nonnegative")
    noisy = beam.distance + rng.normal(0.0, math.sqrt(variance))
    return max(noisy, min_range)


def direction_unit_vector(direction: BeamDirection) -> np.ndarray:
    """Unit vector of a pointing direction (the range-1 sensed point)."""
    cos_t = math.cos(direction.azimuth_theta)
    return np.array(
        [
            cos_t * math.cos(direction.elevation_phi),
            cos_t * math.sin(direction.elevation_phi),
            math.sin(direction.azimuth_theta),
        ]
    )


def angular_distance(a: BeamDirection, b: BeamDirection) -> float:
    """Angle in radians between two pointing directions."""
    dot = float(np.dot(direction_unit_vector(a), direction_unit_vector(b)))
    return math.acos(min(1.0, max(-1.0, dot)))


def to_point(range_m: float, direction: BeamDirection) -> np.ndarray:
    """Map a range along a beam to AP-centered Cartesian coordinates.

    p = r * [cos(theta)cos(phi), cos(theta)sin(phi), sin(theta)].
    """
    if not (range_m > 0):
        raise ValueError("range must be positive")
    return range_m * direction_unit_vector(direction)


def min_detect_power(beam: SensingBeam, params: SensingParams, gamma_min_det: float) -> float:
    """Smallest sensing power whose echo SNR reaches the detection floor.

    Inverts the echo SNR at the beam's distance:
    p = 4 d^4 noise gamma / zeta^2, so echo_snr(p) = gamma exactly.
    """
    if not (gamma_min_det > 0):
        raise ValueError("detection SNR floor must be positive")
    d = beam.distance
    return 4.0 * d**4 * params.noise_power * gamma_min_det / params.rcs_zeta**2


def synthesize_frame(
    joints: np.ndarray,
    codebook: Codebook,
    p_r: float,
    params: SensingParams,
    ap_position: np.ndarray,
    rng: np.random.Generator,
    frame_index: int = 0,
    min_range: float = 0.01,
) -> PointCloudFrame:
    """Sense one skeleton frame: one jittered point per joint.

    For each joint the nearest codebook beam (by angle to the AP-joint ray,
    ties to the lowest beam index) is selected; the echo SNR at the true
    range sets the CRB range variance, and the jittered range is re-projected
    along the quantized beam direction.

    Args:
        joints: (n_joints, 3) joint positions in room coordinates, meters.
        codebook: scanned beam set.
        p_r: sensing transmit power in watts.
        params: echo-channel constants.
        ap_position: (3,) AP location in room coordinates.
        rng: random stream for the range jitter.
        frame_index: index stored on the produced frame.
        min_range: clamp for pathological negative range draws.

    Returns:
        PointCloudFrame in AP-centered coordinates.

    Raises:
        ValueError: when a joint coincides with the AP position.
    """
    joints = np.asarray(joints, dtype=float)
    if joints.ndim != 2 or joints.shape[1] != 3:
        raise ValueError("joints must have shape (n, 3)")
    ap = np.asarray(ap_position, dtype=float).reshape(3)
    beam_units = np.array([direction_unit_vector(d) for d in codebook.directions])

    points = np.empty_like(joints)
    beam_idx = np.empty(joints.shape[0], dtype=int)
    for j, joint in enumerate(joints):
        offset = joint - ap
        true_range = float(np.linalg.norm(offset))
        if true_range < _MIN_JOINT_DISTANCE:
            raise ValueError(f"joint {j} coincides with the AP position")
        ray = offset / true_range
        # argmax returns the first maximum, so angle ties resolve to the
        # lowest beam index.
        idx = int(np.argmax(beam_units @ ray))
        direction = codebook.directions[idx]
        beam = SensingBeam(direction, true_range)
        variance = crb_range_variance(echo_snr(p_r, beam, params), params)
        noisy_range = sample_range(beam, variance, rng, min_range=min_range)
        points[j] = to_point(noisy_range, direction)
        beam_idx[j] = idx
    return PointCloudFrame(points=points, source_beam_index=beam_idx, frame_index=frame_index)
