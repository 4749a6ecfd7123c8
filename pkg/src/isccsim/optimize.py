"""Alternating allocation of network depth and sensing power.

Both subproblems have closed forms: the accuracy surrogate decreases in
depth and sensing power, so the best depth is the largest one latency and
energy admit, and the best sensing power is the largest one the power and
energy budgets admit at that depth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arrays import ChannelSet, Precoder, min_comm_power
from .errors import InfeasibleError
from .pose import SurrogateModel, surrogate_mpjpe
from .resources import (
    Allocation,
    Budget,
    ComputeParams,
    FeasibilityReport,
    check_feasible,
    e_comp,
    reduced_budget,
)
from .sensing import SensingBeam, SensingParams, min_detect_power
from .arrays import BeamDirection

# Guard added before flooring the depth bounds. When the sensing power sits
# exactly on the energy boundary for depth L, l_e_bound returns L up to
# arithmetic error (measured ~1e-13, bounded at 1e-9 by the fixed-point
# identity tests); without the guard the floor could flip to L-1.
_FLOOR_GUARD = 1e-9


@dataclass(frozen=True)
class AOConfig:
    """Iteration limits for the alternating solver."""

    i_max: int = 20
    epsilon: float = 1e-9

    def __post_init__(self):
        if self.i_max < 1:
            raise ValueError("i_max must be at least 1")
        if not (self.epsilon > 0):
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class AOTrace:
    """Iterates of one alternating solve: (depth, p_r, surrogate cm) per step."""

    iterates: tuple[tuple[int, float, float], ...]
    converged: bool

    @property
    def iterations_used(self) -> int:
        return len(self.iterates)


def l_tau_bound(budget: Budget, compute: ComputeParams) -> float:
    """Largest (real-valued) depth the latency budget admits.

    Inverts tau_comp(L) <= T - T0.
    """
    cycles_free = compute.frequency * (budget.slot_t - budget.sensing_t0)
    return (cycles_free - compute.cycles_pointcloud - compute.cycles_base) / compute.cycles_per_layer


def l_e_bound(p_r: float, e_max_tilde: float, budget: Budget, compute: ComputeParams) -> float:
    """Largest (real-valued) depth the energy budget admits at sensing power p_r."""
    if p_r < 0:
        raise ValueError("sensing power must be nonnegative")
    gamma_f2 = compute.switched_capacitance * compute.frequency**2
    fixed = gamma_f2 * (compute.cycles_pointcloud + compute.cycles_base)
    return (e_max_tilde - p_r * budget.sensing_t0 - fixed) / (gamma_f2 * compute.cycles_per_layer)


def l_star(p_r: float, e_max_tilde: float, budget: Budget, compute: ComputeParams) -> int:
    """Best integer depth at sensing power p_r: floor of the tightest bound,
    clamped to [1, l_max]."""
    bound = min(float(budget.l_max), l_tau_bound(budget, compute), l_e_bound(p_r, e_max_tilde, budget, compute))
    return max(1, int(np.floor(bound + _FLOOR_GUARD)))


def p_e_bound(depth: int, e_max_tilde: float, budget: Budget, compute: ComputeParams) -> float:
    """Largest sensing power the energy budget admits at a given depth."""
    return (e_max_tilde - e_comp(depth, compute)) / budget.sensing_t0


def p_r_star(
    depth: int,
    p_t_tilde: float,
    e_max_tilde: float,
    budget: Budget,
    compute: ComputeParams,
    p_r_min: float,
) -> float:
    """Best sensing power at a given depth: the tighter of the power and
    energy caps.

    Raises:
        InfeasibleError: when the cap falls below the detectability floor.
    """
    p = min(p_t_tilde, p_e_bound(depth, e_max_tilde, budget, compute))
    if p < p_r_min:
        raise InfeasibleError(
            f"sensing power cap {p:.6g} W at depth {depth} falls below the "
            f"detectability floor {p_r_min:.6g} W",
            violations=["detect_snr"],
        )
    return p


def _preamble(
    budget: Budget,
    channels: ChannelSet,
    precoder: Precoder,
    sensing: SensingParams,
    surrogate: SurrogateModel,
) -> tuple[np.ndarray, float, float, float, SensingBeam, float]:
    """Shared setup: minimum communication power, reduced budgets, detect floor."""
    comm_powers, p_c_min = min_comm_power(
        channels, precoder, budget.snr_min_comm, budget.p_t_total
    )
    p_t_tilde, e_max_tilde = reduced_budget(p_c_min, budget)
    beam = SensingBeam(BeamDirection(0.0, 0.0), surrogate.reference_distance)
    p_r_min = min_detect_power(beam, sensing, budget.gamma_min_det)
    return comm_powers, p_c_min, p_t_tilde, e_max_tilde, beam, p_r_min


def _validated(
    allocation: Allocation,
    budget: Budget,
    compute: ComputeParams,
    channels: ChannelSet,
    precoder: Precoder,
    beam: SensingBeam,
    sensing: SensingParams,
) -> FeasibilityReport:
    report = check_feasible(allocation, budget, compute, channels, precoder, beam, sensing)
    if not report.feasible:
        raise InfeasibleError(
            "allocation violates: " + ", ".join(report.violations),
            violations=list(report.violations),
        )
    return report


def ao_solve(
    budget: Budget,
    compute: ComputeParams,
    channels: ChannelSet,
    precoder: Precoder,
    sensing: SensingParams,
    surrogate: SurrogateModel,
    config: AOConfig = AOConfig(),
) -> tuple[Allocation, AOTrace]:
    """Alternate the closed-form depth and sensing-power updates.

    Starts from (depth 1, detectability-floor power); converges when the
    depth repeats and the power moves by at most epsilon. If the iterate
    cycles or the budget runs out, the best iterate seen is returned with
    converged=False.

    Returns:
        (allocation, trace); the allocation always passes check_feasible.
    """
    comm_powers, _, p_t_tilde, e_max_tilde, beam, p_r_min = _preamble(
        budget, channels, precoder, sensing, surrogate
    )
    depth, p_r = 1, p_r_min
    iterates: list[tuple[int, float, float]] = []
    seen: set[tuple[int, float]] = {(depth, p_r)}
    converged = False
    for _ in range(config.i_max):
        new_depth = l_star(p_r, e_max_tilde, budget, compute)
        new_p = p_r_star(new_depth, p_t_tilde, e_max_tilde, budget, compute, p_r_min)
        value = surrogate_mpjpe(surrogate, new_p, new_depth)
        iterates.append((new_depth, new_p, value))
        if new_depth == depth and abs(new_p - p_r) <= config.epsilon:
            depth, p_r = new_depth, new_p
            converged = True
            break
        if (new_depth, new_p) in seen:
            # Cycle: fall back to the best iterate visited.
            depth, p_r, _ = min(iterates, key=lambda it: it[2])
            break
        seen.add((new_depth, new_p))
        depth, p_r = new_depth, new_p
    else:
        depth, p_r, _ = min(iterates, key=lambda it: it[2])

    allocation = Allocation(comm_powers=comm_powers, sensing_power=p_r, depth=depth)
    _validated(allocation, budget, compute, channels, precoder, beam, sensing)
    return allocation, AOTrace(iterates=tuple(iterates), converged=converged)


def brute_force_oracle(
    budget: Budget,
    compute: ComputeParams,
    channels: ChannelSet,
    precoder: Precoder,
    sensing: SensingParams,
    surrogate: SurrogateModel,
    p_r_grid_size: int = 1000,
) -> Allocation:
    """Exhaustive reference solver over depth and a dense sensing-power grid.

    The grid spans [detectability floor, reduced power cap] and always
    includes the exact per-depth energy corner points, so any closed-form
    optimum is a candidate. Feasibility uses check_feasible; the minimum
    surrogate value wins, ties going to smaller depth then smaller power.
    """
    if p_r_grid_size < 2:
        raise ValueError("grid needs at least 2 points")
    comm_powers, _, p_t_tilde, e_max_tilde, beam, p_r_min = _preamble(
        budget, channels, precoder, sensing, surrogate
    )
    if p_t_tilde < p_r_min:
        raise InfeasibleError(
            "reduced power cap falls below the detectability floor",
            violations=["detect_snr"],
        )
    candidates = set(np.linspace(p_r_min, p_t_tilde, p_r_grid_size).tolist())
    for depth in range(1, budget.l_max + 1):
        corner = p_e_bound(depth, e_max_tilde, budget, compute)
        if p_r_min <= corner <= p_t_tilde:
            candidates.add(float(corner))
    grid = sorted(candidates)

    best: tuple[float, int, float] | None = None
    for depth in range(1, budget.l_max + 1):
        for p in grid:
            allocation = Allocation(comm_powers=comm_powers, sensing_power=p, depth=depth)
            report = check_feasible(allocation, budget, compute, channels, precoder, beam, sensing)
            if not report.feasible:
                continue
            key = (surrogate_mpjpe(surrogate, p, depth), depth, p)
            if best is None or key < best:
                best = key
    if best is None:
        raise InfeasibleError("no feasible allocation exists on the search grid")
    _, depth, p = best
    return Allocation(comm_powers=comm_powers, sensing_power=p, depth=depth)


def baseline_fixed_l1(
    budget: Budget,
    compute: ComputeParams,
    channels: ChannelSet,
    precoder: Precoder,
    sensing: SensingParams,
    surrogate: SurrogateModel,
) -> Allocation:
    """Depth pinned to 1; sensing power maximized at that depth."""
    comm_powers, _, p_t_tilde, e_max_tilde, beam, p_r_min = _preamble(
        budget, channels, precoder, sensing, surrogate
    )
    p = p_r_star(1, p_t_tilde, e_max_tilde, budget, compute, p_r_min)
    allocation = Allocation(comm_powers=comm_powers, sensing_power=p, depth=1)
    _validated(allocation, budget, compute, channels, precoder, beam, sensing)
    return allocation


def baseline_fixed_prmin(
    budget: Budget,
    compute: ComputeParams,
    channels: ChannelSet,
    precoder: Precoder,
    sensing: SensingParams,
    surrogate: SurrogateModel,
) -> Allocation:
    """Sensing power pinned to the detectability floor; depth maximized there."""
    comm_powers, _, p_t_tilde, e_max_tilde, beam, p_r_min = _preamble(
        budget, channels, precoder, sensing, surrogate
    )
    if p_r_min > p_t_tilde:
        raise InfeasibleError(
            "detectability floor exceeds the reduced power cap",
            violations=["total_power"],
        )
    depth = l_star(p_r_min, e_max_tilde, budget, compute)
    allocation = Allocation(comm_powers=comm_powers, sensing_power=p_r_min, depth=depth)
    _validated(allocation, budget, compute, channels, precoder, beam, sensing)
    return allocation
