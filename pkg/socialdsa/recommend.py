"""
Per-slot channel recommendation exchange.

Each user reports (channel accessed, sensed state) to its social neighbors;
the reports are fused into a recommendation state I_n in {-1, 0, +1}^M per
user, and the state is mapped to a next-slot idle probability.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from common.logging_utils.logging_config import get_logger

from .channel import BUSY, IDLE, ChannelParams
from .errors import ConsistencyError

logger = get_logger('recommend')

NOT_REPORTED = 0


class FusionKind(str, Enum):
    OR = "or"
    MAJORITY = "majority"


@dataclass(frozen=True)
class SensingReport:
    """What one user observed on the channel it accessed this slot."""
    user: int
    channel: int
    sensed_state: int


def reports_from_slot(choices: np.ndarray, channel_states: np.ndarray) -> list:
    """One report per user under perfect sensing."""
    return [SensingReport(user=n, channel=int(m), sensed_state=int(channel_states[m]))
            for n, m in enumerate(choices)]


def report_matrix(reports: Sequence[SensingReport], n_users: int, n_channels: int) -> np.ndarray:
    """(N, M) matrix holding each user's sensed state in its accessed column, 0 elsewhere."""
    matrix = np.zeros((n_users, n_channels), dtype=np.int8)
    for report in reports:
        if report.sensed_state not in (BUSY, IDLE):
            raise ConsistencyError(f"user {report.user} reported state {report.sensed_state}")
        matrix[report.user, report.channel] = report.sensed_state
    return matrix


def fuse_recommendations(
    reports: Sequence[SensingReport],
    social: np.ndarray,
    n_channels: int,
    include_own_report: bool = False,
    fusion: FusionKind = FusionKind.OR,
) -> np.ndarray:
    """
    Recommendation states of all users, shape (N, M), entries in {-1, 0, +1}.

    With the OR rule a channel is +1 if any contributing report sensed it idle,
    -1 if any sensed it busy, 0 if none reported it. Contributors are the
    social neighbors, plus the user itself when ``include_own_report`` is set.
    The majority rule takes the sign of the vote sum (ties give 0).

    Raises:
        ConsistencyError: If idle and busy reports for the same channel reach
            one user in the same slot (homogeneous availability forbids it)
    """
    n_users = social.shape[0]
    if len(reports) != n_users:
        logger.error(f"Fusion got {len(reports)} sensing reports for {n_users} users")
        raise ConsistencyError(f"expected {n_users} sensing reports, got {len(reports)}")

    matrix = report_matrix(reports, n_users, n_channels)
    contributors = social.astype(np.int64)
    if include_own_report:
        contributors = contributors + np.eye(n_users, dtype=np.int64)

    idle_votes = contributors @ (matrix == IDLE).astype(np.int64)
    busy_votes = contributors @ (matrix == BUSY).astype(np.int64)

    if FusionKind(fusion) is FusionKind.OR:
        conflict = (idle_votes > 0) & (busy_votes > 0)
        if conflict.any():
            n, m = np.argwhere(conflict)[0]
            logger.error(f"Conflicting reports: user {n}, channel {m}, {int(conflict.sum())} conflict(s) in total")
            raise ConsistencyError(f"user {n} received idle and busy reports for channel {m} in one slot")
        state = np.where(idle_votes > 0, IDLE, np.where(busy_votes > 0, BUSY, NOT_REPORTED))
    else:
        state = np.sign(idle_votes - busy_votes)

    return state.astype(np.int8)


def idle_probability_from_state(channel: ChannelParams, state: int) -> float:
    """Next-slot idle probability given the recommendation state of ``channel``."""
    if state == IDLE:
        return 1.0 - channel.mu
    if state == BUSY:
        return channel.lam
    if state == NOT_REPORTED:
        return channel.gamma
    raise ValueError(f"recommendation state must be -1, 0 or +1, got {state!r}")


def idle_probability_matrix(channels: Sequence[ChannelParams], rec_states: np.ndarray) -> np.ndarray:
    """Vectorized mapping of an (N, M) recommendation-state matrix to idle probabilities."""
    lam = np.array([c.lam for c in channels])
    mu = np.array([c.mu for c in channels])
    gamma = lam / (lam + mu)
    rec_states = np.asarray(rec_states)
    return np.where(rec_states == IDLE, 1.0 - mu, np.where(rec_states == BUSY, lam, gamma))
