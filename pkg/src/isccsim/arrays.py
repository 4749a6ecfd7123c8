"""Uniform planar array front end: steering vectors, beam codebooks,
downlink channels, and zero-forcing precoding with per-user power control."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InfeasibleError

# Smallest singular-value ratio accepted before the channel matrix is
# declared rank deficient for zero forcing.
_RANK_RTOL = 1e-10


@dataclass(frozen=True)
class ArrayGeometry:
    """Planar array with n_x columns and n_z rows, spacing in wavelengths."""

    n_x: int
    n_z: int
    spacing_over_wavelength: float = 0.5

    def __post_init__(self):
        if self.n_x < 1 or self.n_z < 1:
            raise ValueError(f"array needs at least one element per axis, got {self.n_x}x{self.n_z}")
        if not (self.spacing_over_wavelength > 0):
            raise ValueError("element spacing must be positive")

    @property
    def n_t(self) -> int:
        return self.n_x * self.n_z


@dataclass(frozen=True)
class BeamDirection:
    """Beam pointing angles in radians.

    azimuth_theta lies in (-pi, pi], elevation_phi in [-pi/2, pi/2].
    """

    azimuth_theta: float
    elevation_phi: float

    def __post_init__(self):
        if not (math.isfinite(self.azimuth_theta) and math.isfinite(self.elevation_phi)):
            raise ValueError("beam angles must be finite")
        if not (-math.pi < self.azimuth_theta <= math.pi):
            raise ValueError(f"azimuth {self.azimuth_theta} outside (-pi, pi]")
        if not (-math.pi / 2 <= self.elevation_phi <= math.pi / 2):
            raise ValueError(f"elevation {self.elevation_phi} outside [-pi/2, pi/2]")


def steering_vector(geometry: ArrayGeometry, direction: BeamDirection) -> np.ndarray:
    """Array response for one pointing direction.

    Horizontal and vertical responses combine by Kronecker product, so the
    entry for element (m, n) is exp(j*2*pi*(d/lambda)*sin(phi)*(m*cos(theta) + n)).
    Entries have unit modulus; the vector norm is sqrt(n_t).
    """
    d = geometry.spacing_over_wavelength
    sin_phi = math.sin(direction.elevation_phi)
    phase_x = 2.0 * math.pi * d * sin_phi * math.cos(direction.azimuth_theta)
    phase_z = 2.0 * math.pi * d * sin_phi
    a_x = np.exp(1j * phase_x * np.arange(geometry.n_x))
    a_z = np.exp(1j * phase_z * np.arange(geometry.n_z))
    return np.kron(a_x, a_z)


@dataclass(frozen=True)
class Codebook:
    """Beam codebook: directions with their steering vectors, grid order.

    vectors has shape (n_beams, n_t); row i is the steering vector of
    directions[i]. Built row major: azimuth outer, elevation inner.
    """

    directions: tuple[BeamDirection, ...]
    vectors: np.ndarray = field(repr=False)

    def __post_init__(self):
        if len(self.directions) == 0:
            raise ConfigError("codebook must contain at least one beam")
        if self.vectors.shape[0] != len(self.directions):
            raise ValueError("codebook vectors do not match directions")

    def __len__(self) -> int:
        return len(self.directions)


def build_codebook(
    geometry: ArrayGeometry,
    azimuth_grid: np.ndarray,
    elevation_grid: np.ndarray,
) -> Codebook:
    """Enumerate steering vectors over an angle grid, azimuth-major order."""
    azimuths = np.atleast_1d(np.asarray(azimuth_grid, dtype=float))
    elevations = np.atleast_1d(np.asarray(elevation_grid, dtype=float))
    if azimuths.size == 0 or elevations.size == 0:
        raise ConfigError("codebook angle grids must be non-empty")
    directions = []
    rows = []
    for theta in azimuths:
        for phi in elevations:
            direction = BeamDirection(float(theta), float(phi))
            directions.append(direction)
            rows.append(steering_vector(geometry, direction))
    return Codebook(tuple(directions), np.array(rows))


@dataclass(frozen=True)
class ChannelSet:
    """Downlink channel vectors, one row per user, with receiver noise power."""

    h: np.ndarray = field(repr=False)
    noise_power: float = 1e-6

    def __post_init__(self):
        if self.h.ndim != 2:
            raise ValueError("channel matrix must be 2-D (users x elements)")
        if not (self.noise_power > 0):
            raise ValueError("noise power must be positive")

    @property
    def k_users(self) -> int:
        return self.h.shape[0]

    @property
    def n_t(self) -> int:
        return self.h.shape[1]


def generate_channels(seed: int, k_users: int, n_t: int, noise_power: float) -> ChannelSet:
    """Draw i.i.d. circularly symmetric complex Gaussian channels.

    Each entry has unit variance (real and imaginary parts N(0, 1/2)).
    Deterministic for a given seed.
    """
    if k_users < 1:
        raise ValueError("need at least one user")
    if n_t < k_users:
        raise InfeasibleError(
            f"zero forcing needs n_t >= k_users, got n_t={n_t} < k={k_users}",
            violations=["zf_rank"],
        )
    rng = np.random.default_rng(seed)
    real = rng.standard_normal((k_users, n_t))
    imag = rng.standard_normal((k_users, n_t))
    h = (real + 1j * imag) / np.sqrt(2.0)
    return ChannelSet(h=h, noise_power=float(noise_power))


@dataclass(frozen=True)
class Precoder:
    """Unit-norm zero-forcing directions, one row per user."""

    w: np.ndarray = field(repr=False)

    def __post_init__(self):
        norms = np.linalg.norm(self.w, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-9):
            raise ValueError("precoder rows must have unit norm")


def zf_precoder(channels: ChannelSet) -> Precoder:
    """Zero-forcing directions from the channel pseudo-inverse.

    With H holding the user channels as columns, the unnormalized directions
    are the columns of H (H^H H)^{-1}; each is scaled to unit norm, which
    preserves h_k^H w_j = 0 for j != k.

    Raises numpy.linalg.LinAlgError when the channel matrix is rank
    deficient (smallest singular value below 1e-10 of the largest).
    """
    h_conj = channels.h.conj()
    s = np.linalg.svd(h_conj, compute_uv=False)
    if s[-1] < _RANK_RTOL * s[0]:
        raise np.linalg.LinAlgError(
            f"channel matrix is rank deficient for zero forcing (sv ratio {s[-1]/s[0]:.3e})"
        )
    # pinv(H^H) = H (H^H H)^{-1}: exact right inverse of the conjugated channels.
    w_cols = np.linalg.pinv(h_conj)
    w = w_cols.T / np.linalg.norm(w_cols, axis=0)[:, None]
    return Precoder(w=w)


def comm_snr(channels: ChannelSet, precoder: Precoder, powers: np.ndarray) -> np.ndarray:
    """Per-user receive SNR: p_k |h_k^H w_k|^2 / noise_power.

    Cross terms vanish under zero forcing, so only the matched gain enters.
    """
    powers = np.asarray(powers, dtype=float)
    if powers.shape != (channels.k_users,):
        raise ValueError(f"expected {channels.k_users} powers, got shape {powers.shape}")
    if np.any(powers < 0):
        raise ValueError("transmit powers must be nonnegative")
    gains = np.abs(np.einsum("ij,ij->i", channels.h.conj(), precoder.w)) ** 2
    return powers * gains / channels.noise_power


def min_comm_power(
    channels: ChannelSet,
    precoder: Precoder,
    snr_min: float,
    p_t_total: float,
) -> tuple[np.ndarray, float]:
    """Smallest per-user powers meeting the SNR floor under zero forcing.

    The problem separates per user: p_k = snr_min * noise / |h_k^H w_k|^2.

    Args:
        channels: downlink channels.
        precoder: zero-forcing directions for those channels.
        snr_min: required receive SNR (linear).
        p_t_total: instantaneous total power cap; both each p_k and the sum
            must stay within it.

    Returns:
        (per-user power vector, total power).

    Raises:
        InfeasibleError: naming the violating users when any p_k or the sum
            exceeds p_t_total.
    """
    if not (snr_min > 0):
        raise ValueError("snr_min must be positive")
    gains = np.abs(np.einsum("ij,ij->i", channels.h.conj(), precoder.w)) ** 2
    powers = snr_min * channels.noise_power / gains
    over = np.nonzero(powers > p_t_total)[0]
    if over.size:
        raise InfeasibleError(
            "minimum communication power exceeds the total power cap for user(s) "
            + ", ".join(str(int(u)) for u in over),
            violations=["total_power"],
        )
    total = float(np.sum(powers))
    if total > p_t_total:
        raise InfeasibleError(
            f"summed minimum communication power {total:.6g} W exceeds cap {p_t_total:.6g} W",
            violations=["total_power"],
        )
    return powers, total
