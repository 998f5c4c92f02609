"""
Baseline spectrum-access policies used for comparison.

- Static channel recommendation: pick an idle-recommended channel with a
  constant branching probability p_rec, any other channel otherwise.
- Belief-based access: pick channels in proportion to the observed idle
  ratio X/Y, counting both own and neighbors' sensing results.
"""

from dataclasses import dataclass

import numpy as np

from common.logging_utils.logging_config import get_logger

from .channel import IDLE
from .errors import ConfigurationError
from .sampling import draw_channel, sample_rows

logger = get_logger('baselines')

P_REC_GRID = tuple(round(0.1 * k, 1) for k in range(11))


@dataclass(frozen=True)
class StaticRecConfig:
    p_rec: float

    def __post_init__(self):
        if not 0.0 <= self.p_rec <= 1.0:
            raise ConfigurationError("[policy] p_rec", f"branching probability must lie in [0, 1], got {self.p_rec!r}")
        logger.debug(f"Static recommendation baseline with p_rec={self.p_rec}")

    def choices(self, rec_states: np.ndarray, rng) -> np.ndarray:
        return static_recommendation_choices(rec_states, self.p_rec, rng)


def static_recommendation_probabilities(rec_state: np.ndarray, p_rec: float) -> np.ndarray:
    """
    Choice distribution over channels for one recommendation-state vector.

    Each of the R idle-recommended channels gets p_rec / R and every other
    channel (1 - p_rec) / (M - R); with R = 0 or R = M the choice is uniform.
    """
    rec_state = np.asarray(rec_state)
    n_channels = len(rec_state)
    recommended = rec_state == IDLE
    r = int(recommended.sum())
    if r == 0 or r == n_channels:
        return np.full(n_channels, 1.0 / n_channels)
    return np.where(recommended, p_rec / r, (1.0 - p_rec) / (n_channels - r))


def static_recommendation_choice(rec_state: np.ndarray, p_rec: float, rng) -> int:
    return draw_channel(static_recommendation_probabilities(rec_state, p_rec), rng)


def static_recommendation_choices(rec_states: np.ndarray, p_rec: float, rng) -> np.ndarray:
    """One draw per user from an (N, M) recommendation-state matrix."""
    sigma = np.array([static_recommendation_probabilities(row, p_rec) for row in rec_states])
    return sample_rows(sigma, rng.random(len(rec_states)))


@dataclass
class BeliefState:
    """
    Per-user idle counts X and access counts Y, both (N, M).

    Both start at 1 so every belief begins at 1.
    """
    idle_counts: np.ndarray
    access_counts: np.ndarray

    @classmethod
    def initial(cls, n_users: int, n_channels: int) -> "BeliefState":
        logger.debug(f"Belief counts for {n_users} users on {n_channels} channels start at X = Y = 1")
        return cls(idle_counts=np.ones((n_users, n_channels), dtype=np.int64),
                   access_counts=np.ones((n_users, n_channels), dtype=np.int64))

    @property
    def beliefs(self) -> np.ndarray:
        return self.idle_counts / self.access_counts


def belief_update(belief: BeliefState, user: int, accessed_channel: int, sensed_idle: bool) -> BeliefState:
    """Count one observation of ``accessed_channel`` by ``user``; other channels are untouched."""
    if not 0 <= accessed_channel < belief.access_counts.shape[1]:
        raise IndexError(f"channel {accessed_channel} out of range")
    belief.access_counts[user, accessed_channel] += 1
    if sensed_idle:
        belief.idle_counts[user, accessed_channel] += 1
    return belief


def belief_update_from_reports(belief: BeliefState, report_matrix: np.ndarray, social: np.ndarray) -> BeliefState:
    """
    Fold one slot of sensing reports into every user's counts.

    ``report_matrix`` is (N, M) with each user's sensed state in its accessed
    column. A user counts its own report plus one per neighbor report.
    """
    n_users = report_matrix.shape[0]
    contributors = social.astype(np.int64) + np.eye(n_users, dtype=np.int64)
    belief.access_counts += contributors @ (report_matrix != 0).astype(np.int64)
    belief.idle_counts += contributors @ (report_matrix == IDLE).astype(np.int64)
    return belief


def belief_probabilities(belief: BeliefState, user: int) -> np.ndarray:
    nu = belief.beliefs[user]
    return nu / nu.sum()


def belief_choice(belief: BeliefState, user: int, rng) -> int:
    return draw_channel(belief_probabilities(belief, user), rng)


def belief_choices(belief: BeliefState, rng) -> np.ndarray:
    nu = belief.beliefs
    return sample_rows(nu / nu.sum(axis=1, keepdims=True), rng.random(nu.shape[0]))

