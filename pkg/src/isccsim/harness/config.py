"""Scenario configuration: a single TOML file drives every module."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from ..arrays import ArrayGeometry, ChannelSet, Codebook, build_codebook, generate_channels
from ..errors import ConfigError
from ..optimize import AOConfig
from ..pose import SurrogateModel
from ..resources import Budget, ComputeParams
from ..sensing import SensingBeam, SensingParams
from ..arrays import BeamDirection


def dbm_to_watts(dbm: float) -> float:
    """Convert dBm to watts: 10^((dbm - 30) / 10)."""
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db: float) -> float:
    """Convert a dB ratio to linear scale: 10^(db / 10)."""
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ScenarioConfig:
    """Every tunable of the simulator, with defaults for the reference indoor
    scenario. Key names carry units where one applies."""

    # Users and array
    n_users: int = 4
    n_x: int = 4
    n_z: int = 4
    spacing_over_wavelength: float = 0.5
    channel_seed: int = 1
    noise_power_comm_w: float = 1e-6
    snr_min_comm: float = 5.0
    p_t_total_w: float = 1.0
    # Sensing
    rcs_zeta: float = 1.0
    noise_power_sense_w: float = 1e-6
    bandwidth_r_hz: float = 0.5e9
    speed_of_light_m_s: float = 3.0e8
    gamma_min_det_db: float = -5.0
    reference_distance_m: float = 3.0
    min_range_m: float = 0.01
    ap_position_m: tuple[float, float, float] = (0.0, 0.0, 0.0)
    codebook_n_azimuth: int = 17
    codebook_n_elevation: int = 9
    codebook_azimuth_span_deg: float = 160.0
    codebook_elevation_span_deg: float = 160.0
    # Compute
    cycles_pointcloud: float = 128 * 256 * 8
    cycles_base: float = 384 * 96 * 8
    cycles_per_layer: float = 384 * 96 * 8 * 4
    frequency_hz: float = 1.0e8
    switched_capacitance: float = 1e-25
    l_max: int = 6
    # Slot budget
    slot_t_s: float = 0.1
    sensing_t0_s: float = 0.05
    p_max_dbm: float = 28.0
    comm_full_slot: bool = True
    # Accuracy surrogate
    floor_a_cm: float = 4.1
    floor_b_cm: float = 10.73
    floor_rho: float = 0.29
    jitter_kappa: float = 0.043
    # Solver
    ao_i_max: int = 20
    ao_epsilon_w: float = 1e-9

    def __post_init__(self):
        checks = [
            (self.n_users >= 1, "n_users must be at least 1"),
            (self.n_x >= 1 and self.n_z >= 1, "array needs at least one element per axis"),
            (self.n_x * self.n_z >= self.n_users,
             f"zero forcing needs n_x*n_z >= n_users ({self.n_x * self.n_z} < {self.n_users})"),
            (self.spacing_over_wavelength > 0, "spacing_over_wavelength must be positive"),
            (self.channel_seed >= 0, "channel_seed must be nonnegative"),
            (self.noise_power_comm_w > 0, "noise_power_comm_w must be positive"),
            (self.snr_min_comm > 0, "snr_min_comm must be positive"),
            (self.p_t_total_w > 0, "p_t_total_w must be positive"),
            (self.rcs_zeta > 0, "rcs_zeta must be positive"),
            (self.noise_power_sense_w > 0, "noise_power_sense_w must be positive"),
            (self.bandwidth_r_hz > 0, "bandwidth_r_hz must be positive"),
            (self.speed_of_light_m_s > 0, "speed_of_light_m_s must be positive"),
            (self.reference_distance_m > 0, "reference_distance_m must be positive"),
            (self.min_range_m > 0, "min_range_m must be positive"),
            (len(self.ap_position_m) == 3, "ap_position_m must have 3 coordinates"),
            (self.codebook_n_azimuth >= 1 and self.codebook_n_elevation >= 1,
             "codebook needs at least one beam per axis"),
            (0 < self.codebook_azimuth_span_deg <= 360.0, "codebook_azimuth_span_deg must be in (0, 360]"),
            (0 < self.codebook_elevation_span_deg <= 180.0, "codebook_elevation_span_deg must be in (0, 180]"),
            (self.cycles_pointcloud > 0 and self.cycles_base > 0 and self.cycles_per_layer > 0,
             "cycle counts must be positive"),
            (self.frequency_hz > 0, "frequency_hz must be positive"),
            (self.switched_capacitance > 0, "switched_capacitance must be positive"),
            (self.l_max >= 1, "l_max must be at least 1"),
            (self.slot_t_s > 0, "slot_t_s must be positive"),
            (0 < self.sensing_t0_s < self.slot_t_s,
             f"sensing_t0_s must lie strictly inside the slot (got {self.sensing_t0_s} vs {self.slot_t_s})"),
            (self.floor_a_cm > 0, "floor_a_cm must be positive"),
            (self.floor_b_cm >= 0, "floor_b_cm must be nonnegative"),
            (0 < self.floor_rho < 1, "floor_rho must lie in (0, 1)"),
            (self.jitter_kappa >= 0, "jitter_kappa must be nonnegative"),
            (self.ao_i_max >= 1, "ao_i_max must be at least 1"),
            (self.ao_epsilon_w > 0, "ao_epsilon_w must be positive"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

    # Factories for the domain objects each module consumes.

    def geometry(self) -> ArrayGeometry:
        return ArrayGeometry(self.n_x, self.n_z, self.spacing_over_wavelength)

    def sensing_params(self) -> SensingParams:
        return SensingParams(
            rcs_zeta=self.rcs_zeta,
            noise_power=self.noise_power_sense_w,
            bandwidth=self.bandwidth_r_hz,
            speed_of_light=self.speed_of_light_m_s,
        )

    def compute_params(self) -> ComputeParams:
        return ComputeParams(
            cycles_pointcloud=self.cycles_pointcloud,
            cycles_base=self.cycles_base,
            cycles_per_layer=self.cycles_per_layer,
            frequency=self.frequency_hz,
            switched_capacitance=self.switched_capacitance,
        )

    def budget(self) -> Budget:
        return Budget(
            slot_t=self.slot_t_s,
            sensing_t0=self.sensing_t0_s,
            p_max_avg=dbm_to_watts(self.p_max_dbm),
            p_t_total=self.p_t_total_w,
            snr_min_comm=self.snr_min_comm,
            gamma_min_det=db_to_linear(self.gamma_min_det_db),
            l_max=self.l_max,
        )

    def surrogate(self) -> SurrogateModel:
        return SurrogateModel(
            floor_a=self.floor_a_cm,
            floor_b=self.floor_b_cm,
            floor_rho=self.floor_rho,
            jitter_kappa=self.jitter_kappa,
            reference_distance=self.reference_distance_m,
            sensing=self.sensing_params(),
        )

    def ao_config(self) -> AOConfig:
        return AOConfig(i_max=self.ao_i_max, epsilon=self.ao_epsilon_w)

    def reference_beam(self) -> SensingBeam:
        return SensingBeam(BeamDirection(0.0, 0.0), self.reference_distance_m)

    def codebook(self) -> Codebook:
        half_az = math.radians(self.codebook_azimuth_span_deg) / 2.0
        half_el = math.radians(self.codebook_elevation_span_deg) / 2.0
        azimuths = np.linspace(-half_az, half_az, self.codebook_n_azimuth)
        elevations = np.linspace(-half_el, half_el, self.codebook_n_elevation)
        return build_codebook(self.geometry(), azimuths, elevations)

    def channels(self, seed: int | None = None) -> ChannelSet:
        return generate_channels(
            self.channel_seed if seed is None else seed,
            self.n_users,
            self.n_x * self.n_z,
            self.noise_power_comm_w,
        )

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ScenarioConfig)}
_INT_FIELDS = {
    "n_users", "n_x", "n_z", "channel_seed", "codebook_n_azimuth",
    "codebook_n_elevation", "l_max", "ao_i_max",
}
_BOOL_FIELDS = {"comm_full_slot"}


def _key_line(text: str, key: str) -> int | None:
    for i, line in enumerate(text.splitlines(), start=1):
        if line.strip().startswith(key):
            return i
    return None


def _coerce(key: str, value, text: str):
    where = _key_line(text, key)
    loc = f" (line {where})" if where else ""
    if key in _BOOL_FIELDS:
        if not isinstance(value, bool):
            raise ConfigError(f"{key} must be a boolean{loc}")
        return value
    if key == "ap_position_m":
        if (not isinstance(value, list) or len(value) != 3
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
            raise ConfigError(f"ap_position_m must be a 3-number array{loc}")
        return tuple(float(v) for v in value)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number{loc}")
    if key in _INT_FIELDS:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"{key} must be an integer{loc}")
        return int(value)
    return float(value)


def load_config(path: str | Path) -> ScenarioConfig:
    """Parse and validate a scenario TOML file.

    Unknown keys are rejected by name (with the line they appear on);
    missing keys fall back to the reference-scenario defaults.

    Raises:
        ConfigError: on parse failures, unknown keys, type errors, or
            violated invariants.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc

    overrides = {}
    for key, value in raw.items():
        if key not in _FIELD_TYPES:
            where = _key_line(text, key)
            loc = f" (line {where})" if where else ""
            raise ConfigError(f"unknown config key '{key}'{loc} in {path}")
        overrides[key] = _coerce(key, value, text)
    return ScenarioConfig(**overrides)
