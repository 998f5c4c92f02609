"""
Weak-information distributed reinforcement learning.

Each user keeps a perception value V[n, m, i] of the throughput of channel m
under recommendation state i, updates only the cell it just played with a
stochastic-approximation step, and picks the next channel from a Boltzmann
distribution over the perceptions matching its current recommendation state.

Recommendation states are stored along the last table axis in the order
(+1, 0, -1), i.e. axis index = 1 - state.
"""

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import List, Tuple

import numpy as np

from common.logging_utils.logging_config import get_logger
from common.utils.file_write_utils import atomic_write_text

from .channel import ChannelParams, FadingKind, FadingModel
from .errors import ConfigurationError
from .recommend import idle_probability_from_state
from .sampling import sample_rows

logger = get_logger('learn')

STATES = (1, 0, -1)
N_STATES = len(STATES)


def state_axis(state):
    """Table axis index of a recommendation state (works on arrays too)."""
    return 1 - state


class AlphaSchedule(str, Enum):
    PER_CELL_HARMONIC = "per-cell-harmonic"
    GLOBAL_HARMONIC = "global-harmonic"
    CONSTANT = "constant"


@dataclass(frozen=True)
class LearnerConfig:
    """
    Attributes:
        beta: Boltzmann inverse temperature, in 1 / (payoff unit)
        alpha_schedule: Smoothing-factor schedule
        alpha0: Step size of the constant schedule
        initial_value: V(0) of every cell
        payoff_scale: Payoffs are divided by this before learning (B_max when
            normalization is on, 1 otherwise)
    """
    beta: float
    alpha_schedule: AlphaSchedule = AlphaSchedule.PER_CELL_HARMONIC
    alpha0: float = 0.1
    initial_value: float = 1.0
    payoff_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "alpha_schedule", AlphaSchedule(self.alpha_schedule))
        if not self.beta > 0:
            raise ConfigurationError("[policy] beta", f"beta must be > 0, got {self.beta!r}")
        if self.alpha_schedule is AlphaSchedule.CONSTANT and not 0 < self.alpha0 <= 1:
            raise ConfigurationError("[policy] alpha0", f"constant step must lie in (0, 1], got {self.alpha0!r}")
        if not self.initial_value >= 0:
            raise ConfigurationError("[policy] initial_value", "initial perception must be >= 0")
        if not self.payoff_scale > 0:
            raise ConfigurationError(None, "payoff scale must be > 0")


@dataclass
class PerceptionTable:
    """
    Perception values and visit statistics, all shaped (N, M, 3) except
    ``steps`` (N,), the number of updates each user has made.
    """
    values: np.ndarray
    counts: np.ndarray
    payoff_sums: np.ndarray
    payoff_sq_sums: np.ndarray
    steps: np.ndarray

    @classmethod
    def initial(cls, n_users: int, n_channels: int, initial_value: float = 1.0) -> "PerceptionTable":
        shape = (n_users, n_channels, N_STATES)
        return cls(
            values=np.full(shape, float(initial_value)),
            counts=np.zeros(shape, dtype=np.int64),
            payoff_sums=np.zeros(shape),
            payoff_sq_sums=np.zeros(shape),
            steps=np.zeros(n_users, dtype=np.int64),
        )

    @property
    def n_users(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    def copy(self) -> "PerceptionTable":
        return PerceptionTable(self.values.copy(), self.counts.copy(), self.payoff_sums.copy(),
                               self.payoff_sq_sums.copy(), self.steps.copy())

    @property
    def visited(self) -> np.ndarray:
        return self.counts > 0

    def standard_errors(self) -> np.ndarray:
        """
        Standard error of each cell read as a sample mean of its payoffs
        (exact under the per-cell harmonic schedule); inf below two visits.
        """
        counts = self.counts.astype(float)
        with np.errstate(divide="ignore", invalid="ignore"):
            mean = self.payoff_sums / counts
            variance = (self.payoff_sq_sums - counts * mean ** 2) / (counts - 1)
            se = np.sqrt(np.maximum(variance, 0.0) / counts)
        return np.where(self.counts >= 2, se, np.inf)


def _step_size(table: PerceptionTable, user, channel, axis, config: LearnerConfig):
    schedule = config.alpha_schedule
    if schedule is AlphaSchedule.PER_CELL_HARMONIC:
        return 1.0 / (table.counts[user, channel, axis] + 1)
    if schedule is AlphaSchedule.GLOBAL_HARMONIC:
        return 1.0 / (table.steps[user] + 1)
    return config.alpha0


def update_perception(table: PerceptionTable, user: int, chosen_channel: int, rec_state_at_choice: int,
                      realized_payoff: float, config: LearnerConfig) -> PerceptionTable:
    """
    Move cell (user, chosen_channel, state) toward the realized payoff; every
    other cell is left untouched. The table is updated in place and returned.
    """
    if realized_payoff < 0:
        raise ValueError(f"payoffs are throughputs and cannot be negative, got {realized_payoff}")
    axis = state_axis(rec_state_at_choice)
    payoff = realized_payoff / config.payoff_scale
    alpha = _step_size(table, user, chosen_channel, axis, config)
    old = table.values[user, chosen_channel, axis]
    table.values[user, chosen_channel, axis] = (1.0 - alpha) * old + alpha * payoff
    table.counts[user, chosen_channel, axis] += 1
    table.payoff_sums[user, chosen_channel, axis] += payoff
    table.payoff_sq_sums[user, chosen_channel, axis] += payoff * payoff
    table.steps[user] += 1
    return table


def update_perceptions(table: PerceptionTable, choices: np.ndarray, states_at_choice: np.ndarray,
                       payoffs: np.ndarray, config: LearnerConfig) -> PerceptionTable:
    """All users' updates of one slot; each user touches exactly one cell."""
    users = np.arange(table.n_users)
    states_at_choice = np.asarray(states_at_choice, dtype=np.int64)
    if states_at_choice.shape != (table.n_users,):
        raise ValueError(f"expected one recommendation state per user, shape ({table.n_users},), "
                         f"got {states_at_choice.shape}")
    axes = state_axis(states_at_choice)
    payoff = np.asarray(payoffs, dtype=float) / config.payoff_scale
    alpha = _step_size(table, users, choices, axes, config)
    old = table.values[users, choices, axes]
    table.values[users, choices, axes] = (1.0 - alpha) * old + alpha * payoff
    table.counts[users, choices, axes] += 1
    table.payoff_sums[users, choices, axes] += payoff
    table.payoff_sq_sums[users, choices, axes] += payoff * payoff
    table.steps += 1
    return table


def _softmax_rows(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=-1, keepdims=True)
    weights = np.exp(shifted)
    return weights / weights.sum(axis=-1, keepdims=True)


def relevant_values(table: PerceptionTable, rec_states: np.ndarray) -> np.ndarray:
    """V[n, m, I_m^n] for every user and channel, shape (N, M)."""
    n, m = table.values.shape[:2]
    axes = state_axis(np.asarray(rec_states, dtype=np.int64))
    return table.values[np.arange(n)[:, None], np.arange(m)[None, :], axes]


def boltzmann_strategy(table: PerceptionTable, user: int, rec_state: np.ndarray, beta: float) -> np.ndarray:
    """sigma_m proportional to exp(beta * V[user, m, I_m]) for one user."""
    axes = state_axis(np.asarray(rec_state, dtype=np.int64))
    values = table.values[user, np.arange(table.n_channels), axes]
    return _softmax_rows(beta * values)


def boltzmann_strategies(table: PerceptionTable, rec_states: np.ndarray, beta: float) -> np.ndarray:
    return _softmax_rows(beta * relevant_values(table, rec_states))


def learning_step(table: PerceptionTable, config: LearnerConfig, choices: np.ndarray,
                  states_at_choice: np.ndarray, payoffs: np.ndarray, new_rec_states: np.ndarray,
                  rng) -> np.ndarray:
    """
    One channel-selection stage for every user: update the played cell with
    the realized payoff, then draw the next channel under the new
    recommendation state. Returns the next choices.
    """
    update_perceptions(table, choices, states_at_choice, payoffs, config)
    sigma = boltzmann_strategies(table, new_rec_states, config.beta)
    return sample_rows(sigma, rng.random(table.n_users))


@dataclass(frozen=True)
class ContractionCheck:
    satisfied: bool
    bound: float
    modulus: float


def check_contraction_condition(b_max: float, degree_max: int, beta: float) -> ContractionCheck:
    """
    Sufficient condition beta < 1 / (2 B_max d_max) for the expected-throughput
    operator to be a max-norm contraction, with modulus 2 beta B_max d_max.
    Without interference edges the condition holds for every beta.
    """
    if not (b_max > 0 and beta > 0 and degree_max >= 0):
        raise ConfigurationError(None, "contraction check needs b_max > 0, beta > 0 and degree_max >= 0")
    if degree_max == 0:
        return ContractionCheck(satisfied=True, bound=math.inf, modulus=0.0)
    bound = 1.0 / (2.0 * b_max * degree_max)
    modulus = 2.0 * beta * b_max * degree_max
    return ContractionCheck(satisfied=beta < bound, bound=bound, modulus=modulus)


# ============================================================================
# FIXED-POINT DIAGNOSTICS
# ============================================================================

@dataclass(frozen=True)
class LearningContext:
    """
    Model knowledge needed to evaluate the expected-throughput operator.

    ``rec_state_pool`` holds realized (N, M) recommendation-state matrices
    (shape (K, N, M)); other users' states are drawn from the entries that
    agree with the queried user's state, or from the whole pool if none does.
    """
    channels: Tuple[ChannelParams, ...]
    interference: np.ndarray
    contention: np.ndarray
    fading: FadingModel
    rec_state_pool: np.ndarray
    beta: float
    payoff_scale: float = 1.0


@dataclass(frozen=True)
class OperatorEstimate:
    mean: float
    stderr: float
    n_samples: int


def estimate_expected_throughput_operator(context: LearningContext, table: PerceptionTable, user: int,
                                          channel: int, rec_state: int, n_samples: int,
                                          rng: np.random.Generator) -> OperatorEstimate:
    """
    Monte-Carlo estimate of the expected payoff of ``user`` choosing ``channel``
    in recommendation state ``rec_state``, every other user playing its
    Boltzmann strategy from ``table``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    n_users = table.n_users
    pool = context.rec_state_pool
    matching = pool[pool[:, user, channel] == rec_state]
    if len(matching):
        pool = matching
    states = pool[rng.integers(0, len(pool), size=n_samples)].astype(np.int64)   # (S, N, M)
    states[:, user, channel] = rec_state

    sigma = _softmax_rows(context.beta * table.values[
        np.arange(n_users)[None, :, None], np.arange(table.n_channels)[None, None, :], state_axis(states)])
    choices = sample_rows(sigma.reshape(-1, table.n_channels),
                          rng.random(n_samples * n_users)).reshape(n_samples, n_users)
    choices[:, user] = channel

    omega = idle_probability_from_state(context.channels[channel], rec_state)
    idle = rng.random(n_samples) < omega
    contends = rng.random((n_samples, n_users)) < context.contention[None, :]
    rivals = context.interference[user][None, :] & (choices == channel) & contends
    success = idle & contends[:, user] & ~rivals.any(axis=1)

    mean_rate = context.fading.means[user, channel]
    if context.fading.kind is FadingKind.CONSTANT:
        rate = np.full(n_samples, mean_rate)
    else:
        rate = rng.exponential(mean_rate, size=n_samples)
    payoff = np.where(success, rate, 0.0) / context.payoff_scale

    stderr = float(payoff.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else math.inf
    return OperatorEstimate(mean=float(payoff.mean()), stderr=stderr, n_samples=n_samples)


@dataclass(frozen=True)
class CellResidual:
    """
    One visited cell against the operator.

    ``value_stderr`` is the standard error of the cell's sample mean, using the
    larger of the cell's own payoff variance and the operator's payoff
    variance: a handful of identical payoffs must not claim zero spread.
    """
    user: int
    channel: int
    state: int
    value: float
    operator: float
    visits: int
    operator_stderr: float
    value_stderr: float

    @property
    def residual(self) -> float:
        return abs(self.operator - self.value)

    @property
    def combined_stderr(self) -> float:
        return math.hypot(self.operator_stderr, self.value_stderr)

    @property
    def z_score(self) -> float:
        if self.residual == 0.0:
            return 0.0
        return self.residual / self.combined_stderr if self.combined_stderr > 0 else math.inf


@dataclass(frozen=True)
class ResidualReport:
    """
    Attributes:
        residual: max-norm |R(V) - V| over visited cells
        cells: Per-cell details of the visited cells
        unvisited: Number of cells never updated (excluded)
    """
    residual: float
    cells: Tuple[CellResidual, ...]
    unvisited: int

    @property
    def max_z_score(self) -> float:
        return max((c.z_score for c in self.cells), default=0.0)

    def within(self, n_stderr: float = 3.0) -> bool:
        return self.max_z_score <= n_stderr


def fixed_point_residual(context: LearningContext, table: PerceptionTable, n_samples: int,
                         rng: np.random.Generator) -> ResidualReport:
    """Distance of a learned table from the fixed point of the expected-throughput operator."""
    visited = np.argwhere(table.visited)
    se_values = table.standard_errors()
    cells: List[CellResidual] = []
    for n, m, axis in visited:
        state = STATES[axis]
        visits = int(table.counts[n, m, axis])
        estimate = estimate_expected_throughput_operator(context, table, int(n), int(m), state, n_samples, rng)
        operator_variance = estimate.stderr ** 2 * n_samples if math.isfinite(estimate.stderr) else 0.0
        cell_variance = se_values[n, m, axis] ** 2 * visits
        value_stderr = math.sqrt(max(cell_variance, operator_variance) / visits)
        cells.append(CellResidual(
            user=int(n), channel=int(m), state=state,
            value=float(table.values[n, m, axis]),
            operator=estimate.mean,
            visits=visits,
            operator_stderr=estimate.stderr,
            value_stderr=value_stderr,
        ))
    residual = max((c.residual for c in cells), default=0.0)
    unvisited = int(table.values.size - len(cells))
    logger.debug(f"Fixed-point residual {residual:.6g} over {len(cells)} visited cells ({unvisited} unvisited)")
    return ResidualReport(residual=residual, cells=tuple(cells), unvisited=unvisited)


@dataclass(frozen=True)
class GapReport:
    achieved: float
    optimal: float
    gap: float
    bound: float
    stderr: float

    def within(self, n_stderr: float = 3.0) -> bool:
        return self.gap <= self.bound + n_stderr * self.stderr


def boltzmann_gap(context: LearningContext, table: PerceptionTable, user: int, rec_state: np.ndarray,
                 beta: float, n_samples: int, rng: np.random.Generator) -> GapReport:
    """
    Shortfall of the Boltzmann strategy against the best single channel,
    both evaluated with the operator. The bound is ln(M) / beta.

    Every channel is estimated from the same random seed so that identical
    channels receive identical estimates.
    """
    rec_state = np.asarray(rec_state, dtype=np.int64)
    n_channels = table.n_channels
    seed = int(rng.integers(0, 2 ** 63))
    estimates = [
        estimate_expected_throughput_operator(context, table, user, m, int(rec_state[m]), n_samples,
                                              np.random.default_rng(seed))
        for m in range(n_channels)
    ]
    means = np.array([e.mean for e in estimates])
    ses = np.array([e.stderr if math.isfinite(e.stderr) else 0.0 for e in estimates])
    sigma = boltzmann_strategy(table, user, rec_state, beta)
    best = int(np.argmax(means))
    achieved = float(sigma @ means)
    optimal = float(means[best])
    gap = max(optimal - achieved, 0.0)
    stderr = float(math.sqrt(ses[best] ** 2 + float((sigma ** 2) @ (ses ** 2))))
    return GapReport(achieved=achieved, optimal=optimal, gap=gap,
                     bound=math.log(n_channels) / beta, stderr=stderr)


def max_norm_change(previous: np.ndarray, current: np.ndarray) -> float:
    return float(np.abs(current - previous).max()) if current.size else 0.0


def dump_perception_table(table: PerceptionTable, path: Path, payoff_scale: float = 1.0) -> Path:
    """Write (user, channel, state, value, visits) rows; values in Mbps."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["user", "channel", "state", "value_mbps", "visits"])
    for n in range(table.n_users):
        for m in range(table.n_channels):
            for axis, state in enumerate(STATES):
                writer.writerow([n, m, state, f"{table.values[n, m, axis] * payoff_scale:.12g}",
                                 int(table.counts[n, m, axis])])
    return atomic_write_text(path, buffer.getvalue())
