"""File formats for skeleton traces, synthesized clouds, and calibration."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..pose import SurrogateModel
from ..sensing import PointCloudFrame, synthesize_frame
from .config import ScenarioConfig

SKELETON_HEADER = ["frame", "joint", "x", "y", "z"]
CLOUD_HEADER = ["frame", "point", "beam", "x", "y", "z"]
TARGETS_HEADER = ["p_r_w", "depth", "mpjpe_cm"]


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def read_skeleton_csv(path: str | Path) -> list[tuple[int, np.ndarray]]:
    """Load a skeleton trace: header frame,joint,x,y,z, meters.

    Returns (frame_index, joints) pairs sorted by frame, joints sorted by
    joint id. Every frame must carry the same joint set.
    """
    path = Path(path)
    frames: dict[int, dict[int, tuple[float, float, float]]] = {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SKELETON_HEADER:
            raise ConfigError(f"{path}: expected header {','.join(SKELETON_HEADER)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise ConfigError(f"{path}:{lineno}: expected 5 fields, got {len(row)}")
            try:
                frame, joint = int(row[0]), int(row[1])
                x, y, z = float(row[2]), float(row[3]), float(row[4])
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: malformed row: {exc}") from exc
            if frame < 0 or joint < 0:
                raise ConfigError(f"{path}:{lineno}: frame and joint ids must be nonnegative")
            frames.setdefault(frame, {})
            if joint in frames[frame]:
                raise ConfigError(f"{path}:{lineno}: duplicate joint {joint} in frame {frame}")
            frames[frame][joint] = (x, y, z)
    if not frames:
        raise ConfigError(f"{path}: no skeleton rows found")
    joint_sets = {tuple(sorted(j.keys())) for j in frames.values()}
    if len(joint_sets) != 1:
        raise ConfigError(f"{path}: all frames must share the same joint set")
    out = []
    for frame in sorted(frames):
        joints = frames[frame]
        out.append((frame, np.array([joints[j] for j in sorted(joints)])))
    return out


def synthesize_trace(
    config: ScenarioConfig,
    skeleton: list[tuple[int, np.ndarray]],
    power_w: float,
    seed: int,
) -> list[PointCloudFrame]:
    """Sense a whole skeleton trace. Each frame owns an RNG stream derived
    from (seed, frame index), so frames can be produced in any order."""
    codebook = config.codebook()
    params = config.sensing_params()
    ap = np.asarray(config.ap_position_m)
    frames = []
    for frame_index, joints in skeleton:
        rng = np.random.default_rng(np.random.SeedSequence((seed, frame_index)))
        frames.append(
            synthesize_frame(
                joints, codebook, power_w, params, ap, rng,
                frame_index=frame_index, min_range=config.min_range_m,
            )
        )
    return frames


def write_cloud_csv(frames: list[PointCloudFrame], path: str | Path) -> None:
    """Write sensed frames, one row per point: frame,point,beam,x,y,z."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CLOUD_HEADER)
        for frame in frames:
            for i, (point, beam) in enumerate(zip(frame.points, frame.source_beam_index)):
                writer.writerow(
                    [frame.frame_index, i, int(beam), _fmt(point[0]), _fmt(point[1]), _fmt(point[2])]
                )


def read_targets_csv(path: str | Path) -> list[tuple[float, int, float]]:
    """Load calibration targets: header p_r_w,depth,mpjpe_cm."""
    path = Path(path)
    targets = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TARGETS_HEADER:
            raise ConfigError(f"{path}: expected header {','.join(TARGETS_HEADER)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ConfigError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                targets.append((float(row[0]), int(row[1]), float(row[2])))
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: malformed row: {exc}") from exc
    if not targets:
        raise ConfigError(f"{path}: no calibration targets found")
    return targets


def write_surrogate_toml(model: SurrogateModel, path: str | Path) -> None:
    """Persist fitted surrogate parameters as TOML key-value pairs."""
    path = Path(path)
    lines = [
        f"floor_a_cm = {model.floor_a!r}",
        f"floor_b_cm = {model.floor_b!r}",
        f"floor_rho = {model.floor_rho!r}",
        f"jitter_kappa = {model.jitter_kappa!r}",
        f"reference_distance_m = {model.reference_distance!r}",
    ]
    path.write_text("\n".join(lines) + "\n")
