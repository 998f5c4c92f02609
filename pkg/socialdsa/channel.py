"""
Primary-channel model.

Every channel is an independent two-state Markov chain over {busy, idle}
advanced once per slot; idle channels deliver a user-specific fading
throughput drawn around a per (user, channel) mean.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from common.logging_utils.logging_config import get_logger

from .errors import ConfigurationError

logger = get_logger('channel')

BUSY = -1
IDLE = 1


@dataclass(frozen=True)
class ChannelParams:
    """
    Transition probabilities of one primary channel.

    Attributes:
        id: Channel index (0-based)
        lam: Per-slot busy -> idle transition probability
        mu: Per-slot idle -> busy transition probability
    """
    id: int
    lam: float
    mu: float

    def __post_init__(self):
        for key, value in (("lambda", self.lam), ("mu", self.mu)):
            if not 0.0 < value < 1.0:
                raise ConfigurationError(
                    f"[channels] {key}",
                    f"boundary transition probability {value!r} for channel {self.id} "
                    f"(must lie strictly inside (0, 1))",
                )

    @property
    def gamma(self) -> float:
        """Stationary idle probability."""
        return stationary_idle_probability(self)

    @property
    def transition_matrix(self) -> np.ndarray:
        """Row-stochastic matrix over (busy, idle)."""
        return np.array([[1.0 - self.lam, self.lam], [self.mu, 1.0 - self.mu]])


@dataclass(frozen=True)
class ChannelStateVector:
    """True states of all channels in one slot: -1 busy, +1 idle."""
    states: np.ndarray
    slot: int = 0

    def __post_init__(self):
        states = np.asarray(self.states, dtype=np.int8)
        if states.ndim != 1 or not np.isin(states, (BUSY, IDLE)).all():
            raise ConfigurationError(None, f"channel states must be a vector of -1/+1, got {self.states!r}")
        if self.slot < 0:
            raise ConfigurationError(None, f"slot index must be nonnegative, got {self.slot}")
        states.setflags(write=False)
        object.__setattr__(self, "states", states)

    @property
    def idle(self) -> np.ndarray:
        return self.states == IDLE

    def __len__(self) -> int:
        return len(self.states)


class FadingKind(str, Enum):
    EXPONENTIAL = "exponential"
    CONSTANT = "constant"


@dataclass(frozen=True)
class FadingModel:
    """
    Throughput model on idle channels.

    ``exponential`` draws Rayleigh-fading rates with mean ``means[n, m]``;
    ``constant`` always returns the mean (deterministic payoffs for tests).
    """
    kind: FadingKind
    means: np.ndarray

    def __post_init__(self):
        means = np.array(self.means, dtype=float)
        if means.ndim != 2:
            raise ConfigurationError("[users] throughput_means", "means must form an N x M matrix")
        if not (np.isfinite(means).all() and (means > 0).all()):
            raise ConfigurationError("[users] throughput_means", "all throughput means must be > 0")
        means.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "kind", FadingKind(self.kind))

    @property
    def b_max(self) -> float:
        return float(self.means.max())


def transition_states(states: np.ndarray, lam: np.ndarray, mu: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """
    One Markov step for a vector of states with arbitrary probabilities in [0, 1].

    One uniform variate is drawn per channel whatever its state, so the stream
    position never depends on the trajectory.
    """
    u = rng.random(len(states))
    busy = states == BUSY
    becomes_idle = busy & (u < lam)
    stays_idle = ~busy & ~(u < mu)
    return np.where(becomes_idle | stays_idle, IDLE, BUSY).astype(np.int8)


def step_channels(params: Sequence[ChannelParams], current: ChannelStateVector,
                  rng: np.random.Generator) -> ChannelStateVector:
    """
    Advance every channel by one slot.

    Raises:
        ConfigurationError: If the number of channel parameter sets differs
            from the length of the state vector
    """
    if len(params) != len(current):
        raise ConfigurationError(
            "[channels] count",
            f"{len(params)} channel parameter sets for {len(current)} channel states",
        )
    lam = np.array([p.lam for p in params])
    mu = np.array([p.mu for p in params])
    states = transition_states(current.states, lam, mu, rng)
    return ChannelStateVector(states=states, slot=current.slot + 1)


def stationary_idle_probability(params: ChannelParams) -> float:
    """Long-run idle fraction lambda / (lambda + mu)."""
    return params.lam / (params.lam + params.mu)


def initial_channel_states(params: Sequence[ChannelParams], rng: np.random.Generator) -> ChannelStateVector:
    """Draw slot-0 states from each channel's stationary distribution."""
    gamma = np.array([p.gamma for p in params])
    idle = rng.random(len(params)) < gamma
    return ChannelStateVector(states=np.where(idle, IDLE, BUSY), slot=0)


def sample_throughput(fading: FadingModel, user: int, channel: int, rng: np.random.Generator) -> float:
    """Throughput in Mbps of ``user`` transmitting on idle ``channel``."""
    mean = float(fading.means[user, channel])
    if fading.kind is FadingKind.CONSTANT:
        return mean
    return float(rng.exponential(mean))


def sample_throughputs(fading: FadingModel, choices: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """
    Vectorized draw for every user on its chosen channel.

    Always consumes exactly N exponential variates (none for constant fading)
    so the fading stream stays aligned across policies.
    """
    means = fading.means[np.arange(len(choices)), choices]
    if fading.kind is FadingKind.CONSTANT:
        return means.copy()
    return rng.exponential(1.0, size=len(choices)) * means


@dataclass
class ChannelTrace:
    """Empirical statistics accumulated over a simulated trajectory."""
    idle_slots: np.ndarray
    slots: int
    busy_to_idle: np.ndarray
    busy_visits: np.ndarray
    idle_to_busy: np.ndarray
    idle_visits: np.ndarray

    @property
    def idle_fraction(self) -> np.ndarray:
        return self.idle_slots / self.slots

    @property
    def lambda_hat(self) -> np.ndarray:
        return self.busy_to_idle / np.maximum(self.busy_visits, 1)

    @property
    def mu_hat(self) -> np.ndarray:
        return self.idle_to_busy / np.maximum(self.idle_visits, 1)


def simulate_channels(params: Sequence[ChannelParams], n_slots: int, rng: np.random.Generator) -> ChannelTrace:
    """
    Run the channel chains for ``n_slots`` slots from a stationary start and
    count idle slots and one-step transitions per channel.
    """
    m = len(params)
    lam = np.array([p.lam for p in params])
    mu = np.array([p.mu for p in params])
    current = initial_channel_states(params, rng).states
    idle_slots = np.zeros(m, dtype=np.int64)
    busy_to_idle = np.zeros(m, dtype=np.int64)
    busy_visits = np.zeros(m, dtype=np.int64)
    idle_to_busy = np.zeros(m, dtype=np.int64)
    idle_visits = np.zeros(m, dtype=np.int64)

    for _ in range(n_slots):
        idle_now = current == IDLE
        idle_slots += idle_now
        nxt = transition_states(current, lam, mu, rng)
        busy_visits += ~idle_now
        idle_visits += idle_now
        busy_to_idle += ~idle_now & (nxt == IDLE)
        idle_to_busy += idle_now & (nxt == BUSY)
        current = nxt

    logger.debug(f"Simulated {m} channels for {n_slots} slots")
    return ChannelTrace(
        idle_slots=idle_slots,
        slots=n_slots,
        busy_to_idle=busy_to_idle,
        busy_visits=busy_visits,
        idle_to_busy=idle_to_busy,
        idle_visits=idle_visits,
    )


def idle_fraction_standard_error(params: ChannelParams, n_slots: int) -> float:
    """
    Standard error of the empirical idle fraction of one stationary chain.

    Uses the two-state chain's asymptotic variance gamma (1 - gamma) (1 + rho) / (1 - rho),
    rho = 1 - lambda - mu being the second eigenvalue of the transition matrix.
    """
    gamma = params.gamma
    rho = 1.0 - params.lam - params.mu
    return float(np.sqrt(gamma * (1.0 - gamma) * (1.0 + rho) / (1.0 - rho) / n_slots))
