"""Scenario solving and parameter sweeps with deterministic CSV output."""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..arrays import min_comm_power, zf_precoder
from ..errors import ConfigError, InfeasibleError
from ..optimize import ao_solve, baseline_fixed_l1, baseline_fixed_prmin, brute_force_oracle
from ..pose import surrogate_mpjpe
from ..resources import Allocation, check_feasible
from .config import ScenarioConfig

CSV_HEADER = [
    "param", "value", "scheme", "status", "mpjpe_cm", "depth_l",
    "p_r_w", "p_c_total_w", "iterations", "oracle_gap_cm",
]

# Sweepable parameter -> config field. p_max_avg sweeps in dBm to match the
# usual budget axis.
PARAM_FIELDS = {
    "frequency_f": "frequency_hz",
    "sensing_t0": "sensing_t0_s",
    "p_max_avg": "p_max_dbm",
}

SCHEMES = ("proposed", "fixed_l1", "fixed_prmin", "oracle")
DEFAULT_SCHEMES = ("proposed", "fixed_l1", "fixed_prmin")


@dataclass(frozen=True)
class SweepSpec:
    """One-dimensional sweep: parameter name, range, and schemes to run."""

    parameter: str
    from_value: float
    to_value: float
    steps: int
    schemes: tuple[str, ...] = DEFAULT_SCHEMES

    def __post_init__(self):
        if self.parameter not in PARAM_FIELDS:
            raise ConfigError(
                f"unknown sweep parameter '{self.parameter}'; choose from {sorted(PARAM_FIELDS)}"
            )
        if self.steps < 1:
            raise ConfigError("steps must be at least 1")
        if not self.schemes:
            raise ConfigError("at least one scheme is required")
        unknown = [s for s in self.schemes if s not in SCHEMES]
        if unknown:
            raise ConfigError(f"unknown scheme(s) {unknown}; choose from {list(SCHEMES)}")

    def values(self) -> np.ndarray:
        return np.linspace(self.from_value, self.to_value, self.steps)


def point_seed(seed: int, index: int) -> int:
    """Channel seed for one sweep point, stable under execution order."""
    return int(np.random.SeedSequence((seed, index)).generate_state(1, np.uint32)[0])


def solve_scenario(
    config: ScenarioConfig,
    seed: int | None = None,
    with_oracle: bool = False,
    oracle_grid: int = 1000,
) -> dict:
    """Solve one scenario end to end.

    Returns a report dict with the allocation, its surrogate MPJPE, the
    solver trace, and the feasibility margins; with_oracle adds the
    exhaustive-search allocation and the gap to it.

    Raises:
        InfeasibleError: when no feasible allocation exists.
    """
    channels = config.channels(seed)
    precoder = zf_precoder(channels)
    budget = config.budget()
    compute = config.compute_params()
    sensing = config.sensing_params()
    surrogate = config.surrogate()
    allocation, trace = ao_solve(
        budget, compute, channels, precoder, sensing, surrogate, config.ao_config()
    )
    value = surrogate_mpjpe(surrogate, allocation.sensing_power, allocation.depth)
    report = check_feasible(
        allocation, budget, compute, channels, precoder, config.reference_beam(), sensing,
        full_slot_comm=config.comm_full_slot,
    )
    out = {
        "allocation": allocation,
        "mpjpe_cm": value,
        "trace": trace,
        "feasibility": report,
    }
    if with_oracle:
        oracle = brute_force_oracle(
            budget, compute, channels, precoder, sensing, surrogate, p_r_grid_size=oracle_grid
        )
        oracle_value = surrogate_mpjpe(surrogate, oracle.sensing_power, oracle.depth)
        out["oracle_allocation"] = oracle
        out["oracle_mpjpe_cm"] = oracle_value
        out["oracle_gap_cm"] = value - oracle_value
    return out


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _scheme_row(param, value_str, scheme, allocation, mpjpe, iterations, gap):
    return {
        "param": param,
        "value": value_str,
        "scheme": scheme,
        "status": "ok",
        "mpjpe_cm": _fmt(mpjpe),
        "depth_l": str(allocation.depth),
        "p_r_w": _fmt(allocation.sensing_power),
        "p_c_total_w": _fmt(allocation.total_comm_power),
        "iterations": str(iterations) if iterations is not None else "",
        "oracle_gap_cm": _fmt(gap) if gap is not None else "",
    }


def _infeasible_row(param, value_str, scheme):
    return {
        "param": param,
        "value": value_str,
        "scheme": scheme,
        "status": "infeasible",
        "mpjpe_cm": "",
        "depth_l": "",
        "p_r_w": "",
        "p_c_total_w": "",
        "iterations": "",
        "oracle_gap_cm": "",
    }


def _solve_point(config: ScenarioConfig, spec: SweepSpec, value: float, seed: int) -> list[dict]:
    derived = config.replace(**{PARAM_FIELDS[spec.parameter]: float(value)})
    channels = derived.channels(seed)
    precoder = zf_precoder(channels)
    budget = derived.budget()
    compute = derived.compute_params()
    sensing = derived.sensing_params()
    surrogate = derived.surrogate()
    value_str = _fmt(float(value))

    rows = []
    proposed_value: float | None = None
    solvers = {
        "fixed_l1": baseline_fixed_l1,
        "fixed_prmin": baseline_fixed_prmin,
    }
    # Canonical order so the oracle gap can reference the proposed value no
    # matter how the caller listed the schemes; output is sorted later anyway.
    for scheme in (s for s in SCHEMES if s in spec.schemes):
        try:
            if scheme == "proposed":
                allocation, trace = ao_solve(
                    budget, compute, channels, precoder, sensing, surrogate, derived.ao_config()
                )
                mp = surrogate_mpjpe(surrogate, allocation.sensing_power, allocation.depth)
                proposed_value = mp
                rows.append(_scheme_row(
                    spec.parameter, value_str, scheme, allocation, mp,
                    trace.iterations_used, None,
                ))
            elif scheme == "oracle":
                allocation = brute_force_oracle(
                    budget, compute, channels, precoder, sensing, surrogate
                )
                mp = surrogate_mpjpe(surrogate, allocation.sensing_power, allocation.depth)
                gap = (proposed_value - mp) if proposed_value is not None else None
                rows.append(_scheme_row(
                    spec.parameter, value_str, scheme, allocation, mp, None, gap,
                ))
            else:
                allocation = solvers[scheme](
                    budget, compute, channels, precoder, sensing, surrogate
                )
                mp = surrogate_mpjpe(surrogate, allocation.sensing_power, allocation.depth)
                rows.append(_scheme_row(
                    spec.parameter, value_str, scheme, allocation, mp, None, None,
                ))
        except InfeasibleError:
            rows.append(_infeasible_row(spec.parameter, value_str, scheme))
    return rows


def run_sweep(
    config: ScenarioConfig,
    spec: SweepSpec,
    seed: int = 0,
    max_workers: int | None = None,
) -> list[dict]:
    """Run every scheme at every sweep value.

    Each point derives its channel seed from (seed, point index), so the
    result is independent of execution order; rows come back sorted by
    (value, scheme name). 'oracle' rows carry the gap to 'proposed' when
    both are requested.
    """
    values = spec.values()
    seeds = [point_seed(seed, i) for i in range(len(values))]
    if max_workers is not None and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            per_point = list(pool.map(
                lambda iv: _solve_point(config, spec, iv[1], seeds[iv[0]]),
                enumerate(values),
            ))
    else:
        per_point = [_solve_point(config, spec, v, seeds[i]) for i, v in enumerate(values)]
    rows = [row for point_rows in per_point for row in point_rows]
    rows.sort(key=lambda r: (float(r["value"]), r["scheme"]))
    return rows


def write_sweep_csv(rows: list[dict], path: str | Path) -> None:
    """Write sweep rows with the fixed column order and \\n line endings."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_HEADER, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def read_sweep_csv(path: str | Path) -> list[dict]:
    """Read back a sweep CSV as row dicts (all values strings)."""
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ConfigError(f"{path}: unexpected sweep CSV header {reader.fieldnames}")
        return list(reader)


def revalidate_rows(config: ScenarioConfig, spec: SweepSpec, seed: int, rows: list[dict]) -> None:
    """Re-derive every status=ok row and demand byte-exact agreement.

    Rebuilds each point's scenario and channels from (seed, point index),
    re-runs the row's scheme at full precision, and requires the recorded
    mpjpe/depth/power cells to match the recomputed values exactly under the
    same 12-significant-digit formatting; the recomputed allocation must also
    pass the full constraint check. Exact recomputation avoids tolerance
    juggling on margins that bind exactly (a 12-digit round-trip of a binding
    power already shifts its margin by ~1e-12).

    Raises:
        InfeasibleError: when a row cannot be reproduced or its allocation
            fails the constraint check.
    """
    solvers = {
        "proposed": None,
        "fixed_l1": baseline_fixed_l1,
        "fixed_prmin": baseline_fixed_prmin,
        "oracle": brute_force_oracle,
    }
    values = spec.values()
    index_of = {_fmt(float(v)): i for i, v in enumerate(values)}
    for row in rows:
        if row["status"] != "ok":
            continue
        i = index_of[row["value"]]
        derived = config.replace(**{PARAM_FIELDS[spec.parameter]: float(values[i])})
        channels = derived.channels(point_seed(seed, i))
        precoder = zf_precoder(channels)
        budget = derived.budget()
        compute = derived.compute_params()
        sensing = derived.sensing_params()
        surrogate = derived.surrogate()
        if row["scheme"] == "proposed":
            allocation, _ = ao_solve(
                budget, compute, channels, precoder, sensing, surrogate, derived.ao_config()
            )
        else:
            allocation = solvers[row["scheme"]](
                budget, compute, channels, precoder, sensing, surrogate
            )
        expected = {
            "mpjpe_cm": _fmt(surrogate_mpjpe(surrogate, allocation.sensing_power, allocation.depth)),
            "depth_l": str(allocation.depth),
            "p_r_w": _fmt(allocation.sensing_power),
            "p_c_total_w": _fmt(allocation.total_comm_power),
        }
        for cell, want in expected.items():
            if row[cell] != want:
                raise InfeasibleError(
                    f"row {row}: {cell} does not match the re-derived value {want}"
                )
        report = check_feasible(
            allocation, budget, compute, channels, precoder,
            derived.reference_beam(), sensing,
            full_slot_comm=derived.comm_full_slot,
        )
        if not report.feasible:
            raise InfeasibleError(
                f"row {row}: re-derived allocation violates {report.violations}",
                violations=list(report.violations),
            )
