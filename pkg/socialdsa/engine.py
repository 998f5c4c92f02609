"""
Slotted-time simulation engine.

Each slot runs sensing, contention, transmission, recommendation exchange and
channel selection, then advances the primary channels. Replications are
independent and run in a process pool; results are merged in submission order
so the output never depends on the worker count.
"""

import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import IntEnum
from pathlib import Path
from typing import Deque, Dict, List, Optional, Sequence, Tuple

import numpy as np

from common.logging_utils.logging_config import get_logger
from common.project_config import project_config

from . import baselines, learn
from .channel import IDLE, ChannelStateVector, FadingModel, sample_throughputs, step_channels
from .channel import initial_channel_states as stationary_channel_states
from .errors import ConfigurationError, ConsistencyError
from .game import GameInstance, StrategyProfile, solve_nash, verify_nash
from .recommend import fuse_recommendations, report_matrix, reports_from_slot
from .sampling import sample_rows
from .sim_config import Policy, SimConfig, SocialGraphKind, canonical_axis
from .streams import RandomStreamPlan
from .topology import (Topology, UserParams, build_interference_graph, generate_er_social_graph,
                       load_social_graph_edgelist, read_edgelist_file)

logger = get_logger('engine')


class Outcome(IntEnum):
    BUSY = 0
    NO_CONTEND = 1
    COLLISION = 2
    SUCCESS = 3


@dataclass(frozen=True)
class SlotMetrics:
    """
    What happened in one slot.

    Attributes:
        slot: Slot index
        throughput: Realized per-user throughput in Mbps
        outcomes: Per-user Outcome tags
        iterations: Solver iterations (strong mode only)
        converged: Whether the solver certified an equilibrium (strong mode only)
    """
    slot: int
    throughput: np.ndarray
    outcomes: np.ndarray
    iterations: Optional[int] = None
    converged: Optional[bool] = None

    @property
    def system_throughput(self) -> float:
        return float(self.throughput.sum())


@dataclass
class SimState:
    """
    Mutable state carried from one slot to the next.

    ``rec_states`` are the recommendation states under which ``choices`` were made.
    """
    slot: int
    channels: ChannelStateVector
    choices: np.ndarray
    rec_states: np.ndarray
    perceptions: Optional[learn.PerceptionTable] = None
    beliefs: Optional[baselines.BeliefState] = None
    rec_pool: Deque[np.ndarray] = field(default_factory=deque)


@dataclass(frozen=True)
class ScenarioSetup:
    """Users, graphs and per-user parameters of one replication."""
    topology: Topology
    contention: np.ndarray
    fading: FadingModel
    positions: np.ndarray
    trace_ids: Optional[Tuple[int, ...]] = None


def build_scenario(config: SimConfig, streams: RandomStreamPlan) -> ScenarioSetup:
    """
    Place users and draw their parameters from the assignment stream, and
    build the social graph from the graph stream.
    """
    n, m = config.n_users, config.n_channels
    assign = streams.assignment
    positions = assign.uniform(0.0, config.area_side, size=(n, 2))
    contention = assign.choice(np.array(config.contention_choices), size=n)
    mean_shape = (n, 1) if config.per_user_means else (n, m)
    means = np.broadcast_to(assign.choice(np.array(config.throughput_choices), size=mean_shape), (n, m))

    users = [UserParams(id=k, position=(float(x), float(y)), contention_prob=float(p))
             for k, ((x, y), p) in enumerate(zip(positions, contention))]
    interference = build_interference_graph(users, config.delta)

    trace_ids = None
    if config.social_graph is SocialGraphKind.ER:
        social = generate_er_social_graph(n, config.p_link, streams.graph)
    else:
        trace = read_edgelist_file(Path(config.edgelist_path))
        social, trace_ids = load_social_graph_edgelist(trace, n, selection=config.selection, rng=streams.graph)

    topology = Topology(n_users=n, interference=interference, social=social, delta=config.delta)
    return ScenarioSetup(topology=topology, contention=contention,
                         fading=FadingModel(kind=config.fading, means=means),
                         positions=positions, trace_ids=trace_ids)


class Simulator:
    """
    One replication of one policy.

    Args:
        config: Validated run configuration
        replication: Replication index (selects the random streams)
        policy: Policy to run, defaults to ``config.policy``
        initial_channel_states: Slot-0 channel states instead of a stationary draw
        freeze_channels: Keep channel states fixed across slots (test hook)
    """

    def __init__(self, config: SimConfig, replication: int, policy: Optional[Policy] = None,
                 initial_channel_states: Optional[Sequence[int]] = None, freeze_channels: bool = False):
        config.validate()
        self.config = config
        self.replication = replication
        self.policy = Policy(policy or config.policy)
        self.streams = RandomStreamPlan(config.seed, replication)
        self.scenario = build_scenario(config, self.streams)
        self.channel_params = config.channel_params()
        self.learner_config = config.learner_config()
        self.static_rec = baselines.StaticRecConfig(config.p_rec)
        self.freeze_channels = freeze_channels

        topology = self.scenario.topology
        self.interference = topology.interference
        self.social = topology.social
        self.contention = self.scenario.contention
        self.fading = self.scenario.fading

        if initial_channel_states is None:
            channels = stationary_channel_states(self.channel_params, self.streams.channel)
        else:
            channels = ChannelStateVector(states=np.asarray(initial_channel_states), slot=0)
            if len(channels) != config.n_channels:
                raise ConfigurationError("[channels] count",
                                         f"{len(channels)} initial states for {config.n_channels} channels")
        self.state = self._initial_state(channels)

    def _initial_state(self, channels: ChannelStateVector) -> SimState:
        n, m = self.config.n_users, self.config.n_channels
        rec_states = np.zeros((n, m), dtype=np.int8)
        state = SimState(slot=0, channels=channels, choices=np.zeros(n, dtype=np.int64),
                         rec_states=rec_states, rec_pool=deque(maxlen=self.config.pool_size))
        if self.policy is Policy.WEAK:
            state.perceptions = learn.PerceptionTable.initial(n, m, self.learner_config.initial_value)
        elif self.policy is Policy.BELIEF:
            state.beliefs = baselines.BeliefState.initial(n, m)
        state.choices, _ = self._select(state, rec_states)
        return state

    def _select(self, state: SimState, rec_states: np.ndarray, payoffs: Optional[np.ndarray] = None):
        """Channel choices for the coming slot, plus the solver result in strong mode."""
        rng = self.streams.policy
        if self.policy is Policy.STRONG:
            game = GameInstance.from_recommendations(self.interference, self.contention, self.fading.means,
                                                     self.channel_params, rec_states)
            solution = solve_nash(game, StrategyProfile(state.choices), max_rounds=self.config.max_rounds)
            if not verify_nash(game, solution.profile):
                raise ConsistencyError(f"slot {state.slot}: solver returned a profile that is not a Nash equilibrium")
            return solution.profile.as_array(), solution
        if self.policy is Policy.WEAK:
            table = state.perceptions
            if payoffs is not None:
                users = np.arange(self.config.n_users)
                states_at_choice = state.rec_states[users, state.choices]
                return learn.learning_step(table, self.learner_config, state.choices, states_at_choice,
                                           payoffs, rec_states, rng), None
            sigma = learn.boltzmann_strategies(table, rec_states, self.learner_config.beta)
            return sample_rows(sigma, rng.random(self.config.n_users)), None
        if self.policy is Policy.STATIC_REC:
            return self.static_rec.choices(rec_states, rng), None
        return baselines.belief_choices(state.beliefs, rng), None

    def run_slot(self) -> SlotMetrics:
        """Advance one slot; returns its metrics."""
        state = self.state
        choices = state.choices
        n = self.config.n_users

        # sensing
        sensed = state.channels.states[choices]
        on_idle = sensed == IDLE

        # contention
        draws = self.streams.contention.random(n)
        contends = on_idle & (draws < self.contention)
        same_channel = choices[:, None] == choices[None, :]
        rivals = self.interference & same_channel & contends[None, :]
        success = contends & ~rivals.any(axis=1)

        # transmission
        rates = sample_throughputs(self.fading, choices, self.streams.fading)
        throughput = np.where(success, rates, 0.0)

        outcomes = np.full(n, Outcome.NO_CONTEND, dtype=np.int8)
        outcomes[~on_idle] = Outcome.BUSY
        outcomes[contends & ~success] = Outcome.COLLISION
        outcomes[success] = Outcome.SUCCESS

        # recommendation
        reports = reports_from_slot(choices, state.channels.states)
        rec_next = fuse_recommendations(reports, self.social, self.config.n_channels,
                                        include_own_report=self.config.include_own_report,
                                        fusion=self.config.fusion)
        state.rec_pool.append(rec_next)
        if self.policy is Policy.BELIEF:
            baselines.belief_update_from_reports(
                state.beliefs, report_matrix(reports, n, self.config.n_channels), self.social)

        # selection
        next_choices, solution = self._select(state, rec_next, payoffs=throughput)

        metrics = SlotMetrics(
            slot=state.slot,
            throughput=throughput,
            outcomes=outcomes,
            iterations=solution.iterations if solution else None,
            converged=solution.converged if solution else None,
        )

        if self.freeze_channels:
            channels = ChannelStateVector(state.channels.states, slot=state.channels.slot + 1)
        else:
            channels = step_channels(self.channel_params, state.channels, self.streams.channel)
        state.slot += 1
        state.channels = channels
        state.choices = next_choices
        state.rec_states = rec_next
        logger.debug(f"slot {metrics.slot}: system throughput {metrics.system_throughput:.3f} Mbps")
        return metrics


def run_slot(simulator: Simulator) -> Tuple[SimState, SlotMetrics]:
    """Functional form of :meth:`Simulator.run_slot`."""
    metrics = simulator.run_slot()
    return simulator.state, metrics


@dataclass(frozen=True)
class ReplicationResult:
    """
    Time averages of one replication over the post-warm-up slots.

    Attributes:
        mean_iterations / max_iterations / within_budget: Solver statistics
            (strong mode; NaN otherwise). ``within_budget`` is the fraction of
            slots converging within the configured iteration budget.
        contraction: Contraction-condition check of the learner (weak mode)
        residual: End-of-run fixed-point residual (weak mode with diagnostics on)
        perceptions: Final perception table (weak mode)
    """
    replication: int
    policy: Policy
    mean_system_throughput: float
    per_user_throughput: np.ndarray
    success_fraction: float
    collision_fraction: float
    mean_iterations: float
    max_iterations: float
    within_budget: float
    social_links: int
    slots_averaged: int
    contraction: Optional[learn.ContractionCheck] = None
    residual: float = math.nan
    perceptions: Optional[learn.PerceptionTable] = None


def run_replication(config: SimConfig, replication: int, policy: Optional[Policy] = None,
                    keep_perceptions: bool = False) -> ReplicationResult:
    simulator = Simulator(config, replication, policy=policy)
    horizon, warmup = config.horizon_slots, config.warmup_slots
    n = config.n_users

    total = np.zeros(n)
    successes = collisions = 0
    iterations: List[int] = []
    for _ in range(horizon):
        metrics = simulator.run_slot()
        if metrics.iterations is not None:
            iterations.append(metrics.iterations)
        if metrics.slot < warmup:
            continue
        total += metrics.throughput
        successes += int((metrics.outcomes == Outcome.SUCCESS).sum())
        collisions += int((metrics.outcomes == Outcome.COLLISION).sum())

    averaged = horizon - warmup
    per_user = total / averaged
    iters = np.array(iterations, dtype=float)

    contraction = residual = None
    table = simulator.state.perceptions
    if simulator.policy is Policy.WEAK:
        scale = simulator.learner_config.payoff_scale
        contraction = learn.check_contraction_condition(
            simulator.fading.b_max / scale, simulator.scenario.topology.interference_degree_max, config.beta)
        if config.residual_samples:
            context = learning_context(simulator)
            residual = learn.fixed_point_residual(context, table, config.residual_samples,
                                                  simulator.streams.policy).residual * scale

    result = ReplicationResult(
        replication=replication,
        policy=simulator.policy,
        mean_system_throughput=float(per_user.sum()),
        per_user_throughput=per_user,
        success_fraction=successes / (averaged * n),
        collision_fraction=collisions / (averaged * n),
        mean_iterations=float(iters.mean()) if len(iters) else math.nan,
        max_iterations=float(iters.max()) if len(iters) else math.nan,
        within_budget=float((iters <= config.iteration_budget).mean()) if len(iters) else math.nan,
        social_links=simulator.scenario.topology.social_links,
        slots_averaged=averaged,
        contraction=contraction,
        residual=math.nan if residual is None else float(residual),
        perceptions=table if keep_perceptions else None,
    )
    logger.debug(f"Replication {replication} ({simulator.policy.value}): "
                 f"{result.mean_system_throughput:.4f} Mbps over {averaged} slots")
    return result


def learning_context(simulator: Simulator) -> learn.LearningContext:
    """Operator context of a weak-mode simulator, using its recent recommendation states."""
    return learn.LearningContext(
        channels=simulator.channel_params,
        interference=simulator.interference,
        contention=simulator.contention,
        fading=simulator.fading,
        rec_state_pool=np.array(simulator.state.rec_pool, dtype=np.int8),
        beta=simulator.learner_config.beta,
        payoff_scale=simulator.learner_config.payoff_scale,
    )


# ============================================================================
# EXPERIMENTS
# ============================================================================

@dataclass(frozen=True)
class SweepSpec:
    """A sweep over exactly one axis; ``values`` empty means a single point."""
    axis: Optional[str] = None
    values: Tuple = ()

    def __post_init__(self):
        if self.axis is not None:
            object.__setattr__(self, "axis", canonical_axis(self.axis))
        if self.values and self.axis is None:
            raise ConfigurationError("[run] sweep", "sweep values given without an axis")
        object.__setattr__(self, "values", tuple(self.values))

    @classmethod
    def from_axes(cls, axes: Dict[str, Sequence]) -> "SweepSpec":
        """
        Raises:
            ConfigurationError: If more than one axis is requested
        """
        if len(axes) > 1:
            raise ConfigurationError("[run] sweep", f"sweep over exactly one axis, got {', '.join(axes)}")
        if not axes:
            return cls()
        (axis, values), = axes.items()
        return cls(axis=axis, values=tuple(values))

    def points(self, config: SimConfig) -> List[Tuple[Optional[float], SimConfig]]:
        if self.axis is None or not self.values:
            return [(None, config.validate())]
        return [(value, config.with_axis(self.axis, value)) for value in self.values]


@dataclass(frozen=True)
class PointSummary:
    """Replications of one policy at one sweep point, aggregated."""
    axis: Optional[str]
    value: Optional[float]
    policy: Policy
    config: SimConfig
    replications: Tuple[ReplicationResult, ...]

    @property
    def throughputs(self) -> np.ndarray:
        return np.array([r.mean_system_throughput for r in self.replications])

    @property
    def mean_throughput(self) -> float:
        return float(self.throughputs.mean())

    @property
    def stderr(self) -> float:
        values = self.throughputs
        if len(values) < 2:
            return 0.0
        return float(values.std(ddof=1) / math.sqrt(len(values)))

    def _mean_of(self, name: str) -> float:
        values = np.array([getattr(r, name) for r in self.replications], dtype=float)
        values = values[~np.isnan(values)]
        return float(values.mean()) if len(values) else math.nan

    @property
    def mean_iterations(self) -> float:
        return self._mean_of("mean_iterations")

    @property
    def max_iterations(self) -> float:
        values = np.array([r.max_iterations for r in self.replications], dtype=float)
        return float(np.nanmax(values)) if not np.isnan(values).all() else math.nan

    @property
    def within_budget(self) -> float:
        return self._mean_of("within_budget")

    @property
    def residual(self) -> float:
        return self._mean_of("residual")

    @property
    def social_links(self) -> float:
        return float(np.mean([r.social_links for r in self.replications]))

    @property
    def contraction_modulus(self) -> float:
        moduli = [r.contraction.modulus for r in self.replications if r.contraction is not None]
        return float(max(moduli)) if moduli else math.nan


def _replication_task(args) -> ReplicationResult:
    config, replication, policy, keep_perceptions = args
    return run_replication(config, replication, policy, keep_perceptions)


def _resolve_workers(workers: Optional[int]) -> int:
    workers = project_config.workers if workers is None else workers
    if workers < 1:
        raise ConfigurationError("SOCIAL_DSA_WORKERS", f"worker count must be >= 1, got {workers}")
    return workers


def run_experiment(config: SimConfig, sweep: Optional[SweepSpec] = None, workers: Optional[int] = None,
                   keep_perceptions: bool = False) -> List[PointSummary]:
    """
    Run every (sweep point, policy) combination for ``config.replications``
    replications each.

    Returns:
        One PointSummary per (sweep point, policy), sweep points in the given
        order and policies in ``config.policies`` order
    """
    sweep = sweep or SweepSpec()
    points = sweep.points(config)
    workers = _resolve_workers(workers)

    tasks = []
    layout = []
    for value, point_config in points:
        for policy in point_config.policies:
            layout.append((value, point_config, policy))
            tasks.extend((point_config, r, policy, keep_perceptions) for r in range(point_config.replications))

    logger.info(f"Experiment '{config.experiment_id}': {len(points)} sweep point(s), "
                f"{len(config.policies)} policy(ies), {len(tasks)} replication(s) on {workers} worker(s)")

    if workers == 1 or len(tasks) == 1:
        results = [_replication_task(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_replication_task, tasks))

    summaries = []
    cursor = 0
    for value, point_config, policy in layout:
        count = point_config.replications
        summary = PointSummary(axis=sweep.axis, value=value, policy=policy, config=point_config,
                               replications=tuple(results[cursor:cursor + count]))
        cursor += count
        summaries.append(summary)
        _log_point(summary)
    return summaries


def _log_point(summary: PointSummary):
    where = f"{summary.axis}={summary.value} " if summary.axis else ""
    logger.info(f"{where}{summary.policy.value}: {summary.mean_throughput:.4f} +/- {summary.stderr:.4f} Mbps "
                f"over {len(summary.replications)} replication(s)")
    if summary.policy is Policy.WEAK:
        check = next((r.contraction for r in summary.replications if r.contraction), None)
        if check is not None and not check.satisfied:
            logger.warning(f"{where}beta={summary.config.beta} violates the contraction condition "
                           f"(bound {check.bound:.6g}, modulus {check.modulus:.6g}); convergence is not guaranteed")


def optimize_p_rec(config: SimConfig, grid: Sequence[float] = baselines.P_REC_GRID,
                   workers: Optional[int] = None) -> Tuple[float, List[PointSummary]]:
    """
    Exhaustive search of the static baseline's branching probability.

    Returns:
        (best p_rec, one summary per grid point); ties go to the smaller p_rec
    """
    static = replace(config, policy=Policy.STATIC_REC, compare=())
    summaries = run_experiment(static, SweepSpec(axis="p_rec", values=tuple(grid)), workers=workers)
    best = max(summaries, key=lambda s: (s.mean_throughput, -s.value))
    logger.info(f"Best p_rec = {best.value} ({best.mean_throughput:.4f} Mbps)")
    return float(best.value), summaries
