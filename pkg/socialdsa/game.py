"""
Strong-information channel selection game.

Users pick channels to maximize the expected throughput of the next slot,

    U_n(a) = w[n, a_n] * B[n, a_n] * p_n * prod_{k interfering with n, a_k = a_n} (1 - p_k),

where w are idle probabilities derived from each user's recommendation state.
The game admits the ordinal potential

    Phi(a) = sum_n -ln(1 - p_n) * ( 1/2 sum_{k co-channel interferers of n} ln(1 - p_k)
                                    + ln(w[n, a_n] * B[n, a_n] * p_n) ),

so round-robin best response reaches a pure Nash equilibrium in finitely many
iterations.
"""

import itertools
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Set, Tuple

import numpy as np

from common.logging_utils.logging_config import get_logger

from .channel import ChannelParams
from .errors import ConfigurationError
from .recommend import idle_probability_matrix

logger = get_logger('game')

# Relative tolerance below which two utilities (or potentials) count as equal.
REL_TOL = 1e-12


@dataclass(frozen=True)
class StrategyProfile:
    """Pure channel choice of every user (0-based channel indices)."""
    choices: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "choices", tuple(int(c) for c in self.choices))

    def __len__(self) -> int:
        return len(self.choices)

    def __getitem__(self, user: int) -> int:
        return self.choices[user]

    def with_choice(self, user: int, channel: int) -> "StrategyProfile":
        choices = list(self.choices)
        choices[user] = channel
        return StrategyProfile(tuple(choices))

    def as_array(self) -> np.ndarray:
        return np.array(self.choices, dtype=np.int64)

    @classmethod
    def lowest_channel(cls, n_users: int) -> "StrategyProfile":
        return cls((0,) * n_users)


@dataclass(frozen=True)
class GameInstance:
    """
    One stage game.

    Attributes:
        interference: (N, N) symmetric boolean adjacency
        contention: (N,) contention probabilities p
        means: (N, M) mean throughputs B in Mbps
        idle_probs: (N, M) next-slot idle probabilities w, per user
    """
    interference: np.ndarray
    contention: np.ndarray
    means: np.ndarray
    idle_probs: np.ndarray
    neighbor_arrays: Tuple[np.ndarray, ...] = field(init=False, repr=False, compare=False)
    log_keep: np.ndarray = field(init=False, repr=False, compare=False)
    base: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        interference = np.array(self.interference, dtype=bool)
        contention = np.array(self.contention, dtype=float)
        means = np.array(self.means, dtype=float)
        idle_probs = np.array(self.idle_probs, dtype=float)
        n = len(contention)

        if interference.shape != (n, n) or means.ndim != 2 or means.shape[0] != n or idle_probs.shape != means.shape:
            raise ConfigurationError(None, "game arrays have inconsistent shapes")
        if not ((contention > 0) & (contention < 1)).all():
            raise ConfigurationError("[users] contention_probs", "contention probabilities must lie strictly inside (0, 1)")
        if not ((idle_probs > 0) & (idle_probs < 1)).all():
            raise ConfigurationError(None, "idle probabilities must lie strictly inside (0, 1)")
        if not (means > 0).all():
            raise ConfigurationError("[users] throughput_means", "throughput means must be > 0")

        for name, value in (("interference", interference), ("contention", contention),
                            ("means", means), ("idle_probs", idle_probs)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "neighbor_arrays",
                           tuple(np.flatnonzero(interference[k]) for k in range(n)))
        object.__setattr__(self, "log_keep", np.log1p(-contention))
        object.__setattr__(self, "base", idle_probs * means * contention[:, None])

    @property
    def n_users(self) -> int:
        return len(self.contention)

    @property
    def n_channels(self) -> int:
        return self.means.shape[1]

    @classmethod
    def from_recommendations(cls, interference: np.ndarray, contention: np.ndarray, means: np.ndarray,
                             channels: Sequence[ChannelParams], rec_states: np.ndarray) -> "GameInstance":
        """Stage game whose idle probabilities come from each user's own recommendation state."""
        return cls(interference=interference, contention=contention, means=means,
                   idle_probs=idle_probability_matrix(channels, rec_states))

    def check_profile(self, profile: StrategyProfile) -> np.ndarray:
        choices = profile.as_array()
        if len(choices) != self.n_users:
            raise ConfigurationError(None, f"profile has {len(choices)} entries for {self.n_users} users")
        if len(choices) and (choices.min() < 0 or choices.max() >= self.n_channels):
            raise ConfigurationError(None, f"profile {profile.choices} has a channel outside 0..{self.n_channels - 1}")
        return choices


def _as_choices(game: GameInstance, profile) -> np.ndarray:
    if isinstance(profile, StrategyProfile):
        return game.check_profile(profile)
    return np.asarray(profile, dtype=np.int64)


def improves(candidate: float, incumbent: float) -> bool:
    """True if ``candidate`` beats ``incumbent`` by more than the relative tolerance."""
    return candidate - incumbent > REL_TOL * max(abs(candidate), abs(incumbent))


def _keep_factors(game: GameInstance, choices: np.ndarray, user: int) -> np.ndarray:
    # product of (1 - p_k) over interferers of ``user`` sitting on each channel
    factor = np.ones(game.n_channels)
    nbrs = game.neighbor_arrays[user]
    if len(nbrs):
        np.multiply.at(factor, choices[nbrs], 1.0 - game.contention[nbrs])
    return factor


def channel_utilities(game: GameInstance, profile, user: int) -> np.ndarray:
    """Utility of ``user`` on every channel, the other users' choices held fixed."""
    choices = _as_choices(game, profile)
    return game.base[user] * _keep_factors(game, choices, user)


def success_probability(game: GameInstance, profile, user: int) -> float:
    """Probability that ``user`` grabs its idle channel: p_n times the co-channel keep factors."""
    choices = _as_choices(game, profile)
    return float(game.contention[user] * _keep_factors(game, choices, user)[choices[user]])


def utility(game: GameInstance, profile, user: int) -> float:
    """Expected throughput of ``user`` in Mbps."""
    choices = _as_choices(game, profile)
    return float(channel_utilities(game, choices, user)[choices[user]])


def potential(game: GameInstance, profile) -> float:
    choices = _as_choices(game, profile)
    return float(_potential_terms(game, choices).sum())


def _potential_terms(game: GameInstance, choices: np.ndarray) -> np.ndarray:
    n = game.n_users
    same = game.interference & (choices[:, None] == choices[None, :])
    co_channel = (same * game.log_keep[None, :]).sum(axis=1)
    own = np.log(game.base[np.arange(n), choices])
    return -game.log_keep * (0.5 * co_channel + own)


def best_response(game: GameInstance, profile, user: int) -> int:
    """
    Best channel of ``user``. The incumbent channel is kept unless another
    channel strictly improves on it; otherwise the lowest-index maximizer wins.
    """
    choices = _as_choices(game, profile)
    u = channel_utilities(game, choices, user)
    current = int(choices[user])
    best = int(np.argmax(u))
    if improves(u[best], u[current]):
        return best
    return current


@dataclass(frozen=True)
class NashSolution:
    """
    Result of the round-robin solver.

    Attributes:
        profile: Final channel selection profile
        iterations: Best-response iterations up to and including the last change
        evaluations: All best-response iterations, certifying pass included
        converged: True iff N consecutive iterations changed nothing
        trace: Potential after every iteration (initial value first), if recorded
    """
    profile: StrategyProfile
    iterations: int
    evaluations: int
    converged: bool
    trace: Optional[Tuple[float, ...]] = None


def solve_nash(game: GameInstance, initial: StrategyProfile, max_rounds: int = 100,
               record_trace: bool = False) -> NashSolution:
    """
    Asynchronous best response in fixed user order n = l mod N.

    Stops once N consecutive iterations leave the profile unchanged (a Nash
    certificate) or after ``max_rounds * N`` iterations.
    """
    choices = game.check_profile(initial).copy()
    n_users = game.n_users
    trace: List[float] = [potential(game, choices)] if record_trace else []

    if n_users == 0:
        return NashSolution(initial, 0, 0, True, tuple(trace) if record_trace else None)

    limit = max_rounds * n_users
    stable = 0
    last_change = 0
    step = 0
    converged = False
    while step < limit:
        user = step % n_users
        response = best_response(game, choices, user)
        step += 1
        if response != choices[user]:
            choices[user] = response
            stable = 0
            last_change = step
        else:
            stable += 1
        if record_trace:
            trace.append(potential(game, choices))
        if stable >= n_users:
            converged = True
            break

    if not converged:
        logger.warning(f"Best response did not certify an equilibrium within {max_rounds} rounds "
                       f"({n_users} users, {game.n_channels} channels)")

    return NashSolution(
        profile=StrategyProfile(tuple(choices)),
        iterations=last_change,
        evaluations=step,
        converged=converged,
        trace=tuple(trace) if record_trace else None,
    )


def verify_nash(game: GameInstance, profile) -> bool:
    """True iff no user can strictly improve its utility by switching channel."""
    choices = _as_choices(game, profile)
    for user in range(game.n_users):
        u = channel_utilities(game, choices, user)
        if improves(u.max(), u[choices[user]]):
            return False
    return True


# ============================================================================
# EXHAUSTIVE ENUMERATION (small games only)
# ============================================================================

def enumerate_profiles(n_users: int, n_channels: int) -> np.ndarray:
    """All M^N profiles, shape (M^N, N); the last user varies fastest."""
    return np.array(list(itertools.product(range(n_channels), repeat=n_users)),
                    dtype=np.int64).reshape(-1, n_users)


def profile_index(choices: Sequence[int], n_channels: int) -> int:
    """Row of ``choices`` in :func:`enumerate_profiles`."""
    index = 0
    for c in choices:
        index = index * n_channels + int(c)
    return index


@dataclass(frozen=True)
class ProfileTable:
    """Utilities and potentials of every profile of a small game."""
    profiles: np.ndarray       # (P, N)
    utilities: np.ndarray      # (P, N, M): user n's utility on channel m, others as in profile p
    potentials: np.ndarray     # (P,)
    potential_scale: np.ndarray  # (P,) sum of absolute potential terms


def tabulate_game(game: GameInstance) -> ProfileTable:
    """Evaluate every profile at once."""
    n, m = game.n_users, game.n_channels
    profiles = enumerate_profiles(n, m)
    onehot = np.eye(m)[profiles]                                       # (P, N, M)
    weights = game.interference * game.log_keep[None, :]               # (N, N)
    log_factor = np.einsum("nk,pkm->pnm", weights, onehot)
    utilities = game.base[None, :, :] * np.exp(log_factor)

    own_log_factor = np.take_along_axis(log_factor, profiles[:, :, None], axis=2)[:, :, 0]
    own_log_base = np.log(game.base[np.arange(n)[None, :], profiles])
    terms = -game.log_keep[None, :] * (0.5 * own_log_factor + own_log_base)
    scale = (-game.log_keep[None, :] * (0.5 * np.abs(own_log_factor) + np.abs(own_log_base))).sum(axis=1)
    return ProfileTable(profiles=profiles, utilities=utilities,
                        potentials=terms.sum(axis=1), potential_scale=scale)


def _tolerant_sign(delta: np.ndarray, scale: np.ndarray) -> np.ndarray:
    return np.where(np.abs(delta) <= REL_TOL * scale, 0, np.sign(delta)).astype(np.int8)


def potential_sign_violations(game: GameInstance, table: Optional[ProfileTable] = None) -> int:
    """
    Count unilateral deviations, over all profiles, where the sign of the
    deviator's utility change differs from the sign of the potential change.
    """
    table = tabulate_game(game) if table is None else table
    n, m = game.n_users, game.n_channels
    profiles = table.profiles
    rows = np.arange(len(profiles))
    stride = m ** (n - 1 - np.arange(n))                               # (N,)

    current = np.take_along_axis(table.utilities, profiles[:, :, None], axis=2)   # (P, N, 1)
    d_utility = table.utilities - current
    u_scale = np.maximum(table.utilities, current)

    target = (rows[:, None, None]
              + (np.arange(m)[None, None, :] - profiles[:, :, None]) * stride[None, :, None])  # (P, N, M)
    d_potential = table.potentials[target] - table.potentials[:, None, None]
    phi_scale = np.maximum(table.potential_scale[target], table.potential_scale[:, None, None])

    mismatch = _tolerant_sign(d_utility, u_scale) != _tolerant_sign(d_potential, phi_scale)
    return int(mismatch.sum())


def brute_force_nash_set(game: GameInstance, table: Optional[ProfileTable] = None) -> Set[Tuple[int, ...]]:
    """Every pure Nash equilibrium of a small game."""
    table = tabulate_game(game) if table is None else table
    current = np.take_along_axis(table.utilities, table.profiles[:, :, None], axis=2)[:, :, 0]
    best = table.utilities.max(axis=2)
    stable = (best - current) <= REL_TOL * np.maximum(best, current)
    equilibria = table.profiles[stable.all(axis=1)]
    return {tuple(int(c) for c in row) for row in equilibria}
