"""
Simulation configuration.

A frozen dataclass holding every parameter of a run. Defaults reproduce the
desk-scale version of the reference setup: 20 users, 5 channels with
lambda = mu = 0.2, users in a 500 m square with a 100 m interference range,
contention probabilities from {0.1, 0.2, 0.3} and mean rates from
{10, ..., 50} Mbps.

``validate()`` raises ConfigurationError naming the config-file key of the
offending value, so the same messages serve the library and the command line.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Optional, Tuple

from .channel import ChannelParams, FadingKind
from .errors import ConfigurationError
from .learn import AlphaSchedule, LearnerConfig
from .recommend import FusionKind
from .topology import SelectionPolicy


class Policy(str, Enum):
    STRONG = "strong"
    WEAK = "weak"
    STATIC_REC = "static_rec"
    BELIEF = "belief"


class SocialGraphKind(str, Enum):
    ER = "er"
    EDGELIST = "edgelist"


# Sweepable axes and the SimConfig field each one sets.
SWEEP_AXES = {
    "p_link": "p_link",
    "delta": "delta",
    "n_users": "n_users",
    "beta": "beta",
    "p_rec": "p_rec",
}
SWEEP_ALIASES = {"P_L": "p_link", "N": "n_users", "pl": "p_link"}


def canonical_axis(name: str) -> str:
    axis = SWEEP_ALIASES.get(name, name)
    if axis not in SWEEP_AXES:
        raise ConfigurationError("[run] sweep", f"unknown sweep axis {name!r}; valid axes: {', '.join(SWEEP_AXES)}")
    return axis


@dataclass(frozen=True)
class SimConfig:
    """
    Attributes:
        n_users: Number of secondary users N
        n_channels: Number of primary channels M
        horizon_slots: Slots per replication
        replications: Independent replications per sweep point
        seed: Master seed
        policy: Channel-selection policy
        compare: Extra policies evaluated on the same random numbers
        lambdas: Busy -> idle probability of each channel
        mus: Idle -> busy probability of each channel
        fading: Fading model on idle channels
        area_side: Side of the square deployment area in meters
        delta: Interference range in meters
        social_graph: Erdos-Renyi or edge-list social graph
        p_link: Erdos-Renyi link probability P_L
        edgelist_path: Friendship edge list (edgelist graphs only)
        selection: How trace nodes are assigned to users
        contention_choices: Set p_n is drawn from
        throughput_choices: Set of mean rates (Mbps) B[n][m] is drawn from
        per_user_means: Draw one mean per user instead of per (user, channel)
        beta: Boltzmann inverse temperature
        alpha_schedule: Perception smoothing schedule
        alpha0: Step size of the constant schedule
        initial_value: Initial perception value
        normalize_payoffs: Divide payoffs by B_max before learning
        p_rec: Branching probability of the static-recommendation baseline
        fusion: Recommendation fusion rule
        include_own_report: Fold a user's own sensing result into its state
        warmup_fraction: Leading fraction of slots excluded from averages
        max_rounds: Round limit of the Nash solver (rounds of N iterations)
        iteration_budget: Iteration count used for the convergence-speed statistic
        pool_size: Realized recommendation states kept for learner diagnostics
        residual_samples: Monte-Carlo samples per cell of the end-of-run
            fixed-point residual (0 disables it)
        experiment_id: Label copied into every result row
    """
    n_users: int = 20
    n_channels: int = 5
    horizon_slots: int = 5000
    replications: int = 20
    seed: int = 12345
    policy: Policy = Policy.STRONG
    compare: Tuple[Policy, ...] = ()

    lambdas: Tuple[float, ...] = (0.2,) * 5
    mus: Tuple[float, ...] = (0.2,) * 5
    fading: FadingKind = FadingKind.EXPONENTIAL

    area_side: float = 500.0
    delta: float = 100.0
    social_graph: SocialGraphKind = SocialGraphKind.ER
    p_link: float = 0.2
    edgelist_path: Optional[Path] = None
    selection: SelectionPolicy = SelectionPolicy.RANDOM_N

    contention_choices: Tuple[float, ...] = (0.1, 0.2, 0.3)
    throughput_choices: Tuple[float, ...] = (10.0, 20.0, 30.0, 40.0, 50.0)
    per_user_means: bool = False

    beta: float = 3.0
    alpha_schedule: AlphaSchedule = AlphaSchedule.PER_CELL_HARMONIC
    alpha0: float = 0.1
    initial_value: float = 1.0
    normalize_payoffs: bool = False

    p_rec: float = 0.5
    fusion: FusionKind = FusionKind.OR
    include_own_report: bool = True

    warmup_fraction: float = 0.1
    max_rounds: int = 100
    iteration_budget: int = 30
    pool_size: int = 256
    residual_samples: int = 200
    experiment_id: str = "default"

    def __post_init__(self):
        for name, kind in (("policy", Policy), ("fading", FadingKind), ("social_graph", SocialGraphKind),
                           ("selection", SelectionPolicy), ("alpha_schedule", AlphaSchedule),
                           ("fusion", FusionKind)):
            object.__setattr__(self, name, kind(getattr(self, name)))
        object.__setattr__(self, "compare", tuple(Policy(p) for p in self.compare))
        for name in ("lambdas", "mus", "contention_choices", "throughput_choices"):
            object.__setattr__(self, name, tuple(float(x) for x in getattr(self, name)))
        if self.edgelist_path is not None:
            object.__setattr__(self, "edgelist_path", Path(self.edgelist_path))

    @property
    def policies(self) -> Tuple[Policy, ...]:
        """The main policy followed by the compared ones, duplicates dropped."""
        ordered = [self.policy]
        ordered.extend(p for p in self.compare if p not in ordered)
        return tuple(ordered)

    @property
    def warmup_slots(self) -> int:
        return int(math.floor(self.warmup_fraction * self.horizon_slots))

    def channel_params(self) -> Tuple[ChannelParams, ...]:
        return tuple(ChannelParams(id=m, lam=lam, mu=mu)
                     for m, (lam, mu) in enumerate(zip(self.lambdas, self.mus)))

    @property
    def b_max(self) -> float:
        return max(self.throughput_choices)

    def learner_config(self) -> LearnerConfig:
        return LearnerConfig(
            beta=self.beta,
            alpha_schedule=self.alpha_schedule,
            alpha0=self.alpha0,
            initial_value=self.initial_value,
            payoff_scale=self.b_max if self.normalize_payoffs else 1.0,
        )

    def with_axis(self, axis: str, value) -> "SimConfig":
        """Copy with one sweep axis set to ``value``, validated."""
        field_name = SWEEP_AXES[canonical_axis(axis)]
        if field_name == "n_users":
            value = int(value)
        variant = replace(self, **{field_name: value})
        variant.validate()
        return variant

    def validate(self) -> "SimConfig":
        """
        Check every invariant of the configuration.

        Raises:
            ConfigurationError: On the first violated invariant, naming its key
        """
        _require(self.n_users >= 1, "[users] n_users", f"need at least one user, got {self.n_users}")
        _require(self.n_channels >= 1, "[channels] n_channels", f"need at least one channel, got {self.n_channels}")
        _require(self.horizon_slots >= 1, "[run] horizon_slots", f"must be >= 1, got {self.horizon_slots}")
        _require(self.replications >= 1, "[run] replications", f"must be >= 1, got {self.replications}")
        _require(self.seed >= 0, "[run] seed", f"must be a nonnegative integer, got {self.seed}")

        for key, values in (("lambda", self.lambdas), ("mu", self.mus)):
            _require(len(values) == self.n_channels, f"[channels] {key}",
                     f"{len(values)} values given for {self.n_channels} channels")
        self.channel_params()

        _require(self.area_side > 0, "[topology] area_side", f"must be > 0, got {self.area_side}")
        _require(self.delta > 0, "[topology] delta", f"interference range must be > 0, got {self.delta}")
        _require(0.0 <= self.p_link <= 1.0, "[topology] p_link", f"link probability must lie in [0, 1], got {self.p_link}")
        if self.social_graph is SocialGraphKind.EDGELIST:
            _require(self.edgelist_path is not None, "[topology] edgelist_path", "required for edgelist social graphs")

        _require(len(self.contention_choices) > 0, "[users] contention_probs", "empty set")
        for p in self.contention_choices:
            _require(0.0 < p < 1.0, "[users] contention_probs",
                     f"contention probability {p} must lie strictly inside (0, 1)")
        _require(len(self.throughput_choices) > 0, "[users] throughput_means", "empty set")
        for b in self.throughput_choices:
            _require(b > 0 and math.isfinite(b), "[users] throughput_means", f"mean rate {b} must be > 0")

        _require(self.beta > 0, "[policy] beta", f"must be > 0, got {self.beta}")
        self.learner_config()
        _require(0.0 <= self.p_rec <= 1.0, "[policy] p_rec", f"branching probability must lie in [0, 1], got {self.p_rec}")

        _require(0.0 <= self.warmup_fraction < 1.0, "[run] warmup_fraction", f"must lie in [0, 1), got {self.warmup_fraction}")
        _require(self.max_rounds >= 1, "[run] max_rounds", f"must be >= 1, got {self.max_rounds}")
        _require(self.iteration_budget >= 1, "[run] iteration_budget", f"must be >= 1, got {self.iteration_budget}")
        _require(self.pool_size >= 1, "[run] pool_size", f"must be >= 1, got {self.pool_size}")
        _require(self.residual_samples >= 0 and self.residual_samples != 1, "[run] residual_samples",
                 f"must be 0 (off) or >= 2, got {self.residual_samples}")
        return self


def _require(condition: bool, key: str, reason: str):
    if not condition:
        raise ConfigurationError(key, reason)
