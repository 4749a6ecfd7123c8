"""Slot-level resource accounting: compute latency/energy, budget reduction,
and full feasibility checks for an allocation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arrays import ChannelSet, Precoder, comm_snr
from .errors import InfeasibleError
from .sensing import SensingBeam, SensingParams, echo_snr

# |margin| at or below this counts as a binding constraint; margins below
# -BINDING_ATOL count as violations.
BINDING_ATOL = 1e-12


@dataclass(frozen=True)
class ComputeParams:
    """Edge-compute cost model.

    Cycle counts split into a point-cloud embedding term, a depth-independent
    backbone term, and a per-layer term; energy follows the switched
    capacitance model gamma * cycles * f^2.
    """

    cycles_pointcloud: float = 128 * 256 * 8
    cycles_base: float = 384 * 96 * 8
    cycles_per_layer: float = 384 * 96 * 8 * 4
    frequency: float = 1.0e8
    switched_capacitance: float = 1e-25

    def __post_init__(self):
        for name in ("cycles_pointcloud", "cycles_base", "cycles_per_layer",
                     "frequency", "switched_capacitance"):
            if not (getattr(self, name) > 0):
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class Budget:
    """Per-slot resource limits."""

    slot_t: float = 0.1
    sensing_t0: float = 0.05
    p_max_avg: float = 10 ** ((28.0 - 30.0) / 10.0)
    p_t_total: float = 1.0
    snr_min_comm: float = 5.0
    gamma_min_det: float = 10 ** (-5.0 / 10.0)
    l_max: int = 6

    def __post_init__(self):
        if not (self.slot_t > 0):
            raise ValueError("slot duration must be positive")
        if not (0 < self.sensing_t0 < self.slot_t):
            raise ValueError("sensing duration must lie strictly inside the slot")
        for name in ("p_max_avg", "p_t_total", "snr_min_comm", "gamma_min_det"):
            if not (getattr(self, name) > 0):
                raise ValueError(f"{name} must be positive")
        if self.l_max < 1:
            raise ValueError("l_max must be at least 1")


@dataclass(frozen=True)
class Allocation:
    """One operating point: per-user communication powers, sensing power, depth."""

    comm_powers: np.ndarray = field(repr=False)
    sensing_power: float = 0.0
    depth: int = 1

    def __post_init__(self):
        powers = np.asarray(self.comm_powers, dtype=float)
        if powers.ndim != 1:
            raise ValueError("comm_powers must be a vector")
        if np.any(powers < 0):
            raise ValueError("communication powers must be nonnegative")
        if self.sensing_power < 0:
            raise ValueError("sensing power must be nonnegative")
        if self.depth < 1:
            raise ValueError("depth must be at least 1")

    @property
    def total_comm_power(self) -> float:
        return float(np.sum(self.comm_powers))


def tau_comp(depth: int, params: ComputeParams) -> float:
    """Inference latency in seconds: total cycles over clock frequency."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    cycles = params.cycles_pointcloud + params.cycles_base + depth * params.cycles_per_layer
    return cycles / params.frequency


def e_comp(depth: int, params: ComputeParams) -> float:
    """Inference energy in joules: gamma * total cycles * f^2.

    Identity: e_comp = gamma * f^3 * tau_comp.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    cycles = params.cycles_pointcloud + params.cycles_base + depth * params.cycles_per_layer
    return params.switched_capacitance * cycles * params.frequency**2


def comm_energy(total_comm_power: float, budget: Budget, full_slot: bool = True) -> float:
    """Communication energy for the slot.

    Downlink transmission spans the whole slot by default; full_slot=False
    restricts it to the sensing window for sensitivity analysis.
    """
    if total_comm_power < 0:
        raise ValueError("total communication power must be nonnegative")
    duration = budget.slot_t if full_slot else budget.sensing_t0
    return total_comm_power * duration


def reduced_budget(p_c_min: float, budget: Budget) -> tuple[float, float]:
    """Budgets left for sensing and compute after minimum communication power.

    Returns (p_t_tilde, e_max_tilde):
    p_t_tilde = p_t_total - p_c_min and
    e_max_tilde = p_max_avg * T - p_c_min * T.
    """
    if p_c_min < 0:
        raise ValueError("minimum communication power must be nonnegative")
    if p_c_min > budget.p_t_total or p_c_min > budget.p_max_avg:
        raise InfeasibleError(
            f"minimum communication power {p_c_min:.6g} W exhausts the power budget",
            violations=["total_power"],
        )
    p_t_tilde = budget.p_t_total - p_c_min
    e_max_tilde = budget.p_max_avg * budget.slot_t - p_c_min * budget.slot_t
    return p_t_tilde, e_max_tilde


@dataclass(frozen=True)
class FeasibilityReport:
    """Constraint-by-constraint margins for one allocation.

    Margins are satisfied when nonnegative; |margin| <= BINDING_ATOL is
    classified as binding. feasible requires every margin >= -BINDING_ATOL.
    """

    feasible: bool
    margins: dict[str, float]
    violations: tuple[str, ...]
    binding: tuple[str, ...]


def check_feasible(
    allocation: Allocation,
    budget: Budget,
    compute: ComputeParams,
    channels: ChannelSet,
    precoder: Precoder,
    reference_beam: SensingBeam,
    sensing: SensingParams,
    full_slot_comm: bool = True,
) -> FeasibilityReport:
    """Evaluate all slot constraints for an allocation.

    Margins reported (value >= 0 means satisfied):
        latency:     T - T0 - tau_comp(depth)
        energy:      P_max*T - (E_comm + p_r*T0 + E_comp)
        comm_snr:    min_k SNR_k - snr_min
        detect_snr:  echo SNR at the reference beam - gamma_min_det
        depth:       min(depth - 1, l_max - depth)
        total_power: P_t - (p_r + sum p_k)
    """
    tau = tau_comp(allocation.depth, compute)
    energy_used = (
        comm_energy(allocation.total_comm_power, budget, full_slot=full_slot_comm)
        + allocation.sensing_power * budget.sensing_t0
        + e_comp(allocation.depth, compute)
    )
    snrs = comm_snr(channels, precoder, allocation.comm_powers)
    margins = {
        "latency": budget.slot_t - budget.sensing_t0 - tau,
        "energy": budget.p_max_avg * budget.slot_t - energy_used,
        "comm_snr": float(np.min(snrs)) - budget.snr_min_comm,
        "detect_snr": echo_snr(allocation.sensing_power, reference_beam, sensing)
        - budget.gamma_min_det,
        "depth": float(min(allocation.depth - 1, budget.l_max - allocation.depth)),
        "total_power": budget.p_t_total
        - (allocation.sensing_power + allocation.total_comm_power),
    }
    violations = tuple(name for name, m in margins.items() if m < -BINDING_ATOL)
    binding = tuple(name for name, m in margins.items() if abs(m) <= BINDING_ATOL)
    return FeasibilityReport(
        feasible=not violations,
        margins=margins,
        violations=violations,
        binding=binding,
    )
