"""
Physical interference graph and social trust graph.

Both graphs are stored as symmetric, irreflexive boolean adjacency matrices
indexed by user id. The interference graph links users within the
interference range; the social graph is either Erdos-Renyi or read from a
friendship edge list.
"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from common.logging_utils.logging_config import get_logger

from .errors import ConfigurationError, EdgeListParseError

logger = get_logger('topology')


@dataclass(frozen=True)
class UserParams:
    """
    A secondary user.

    Attributes:
        id: User index (0-based)
        position: (x, y) in meters
        contention_prob: Probability p_n of contending for an idle channel
    """
    id: int
    position: Tuple[float, float]
    contention_prob: float

    def __post_init__(self):
        if not 0.0 < self.contention_prob < 1.0:
            raise ConfigurationError(
                "[users] contention_probs",
                f"contention probability {self.contention_prob!r} of user {self.id} must lie strictly inside (0, 1)",
            )
        if not np.isfinite(self.position).all():
            raise ConfigurationError(None, f"position of user {self.id} must be finite, got {self.position!r}")


class SelectionPolicy(str, Enum):
    FIRST_N = "first-n"
    RANDOM_N = "random-n"


@dataclass(frozen=True)
class Topology:
    """Interference and social graphs over ``n_users`` users."""
    n_users: int
    interference: np.ndarray
    social: np.ndarray
    delta: float

    def __post_init__(self):
        for name in ("interference", "social"):
            adjacency = np.array(getattr(self, name), dtype=bool)
            if adjacency.shape != (self.n_users, self.n_users):
                raise ConfigurationError(None, f"{name} adjacency must be {self.n_users}x{self.n_users}")
            if adjacency.diagonal().any() or not (adjacency == adjacency.T).all():
                raise ConfigurationError(None, f"{name} adjacency must be symmetric and irreflexive")
            adjacency.setflags(write=False)
            object.__setattr__(self, name, adjacency)

    @property
    def interference_degree_max(self) -> int:
        return int(self.interference.sum(axis=1).max()) if self.n_users else 0

    @property
    def social_links(self) -> int:
        return int(self.social.sum()) // 2


def place_users(n_users: int, area_side: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform positions in the square [0, area_side]^2, shape (N, 2)."""
    return rng.uniform(0.0, area_side, size=(n_users, 2))


def build_interference_graph(users: Sequence[UserParams], delta: float) -> np.ndarray:
    """
    Link every pair of distinct users whose Euclidean distance is at most ``delta``.

    Raises:
        ConfigurationError: If ``delta`` is not positive
    """
    if not delta > 0:
        raise ConfigurationError("[topology] delta", f"interference range must be > 0, got {delta!r}")
    if not users:
        return np.zeros((0, 0), dtype=bool)
    positions = np.array([u.position for u in users], dtype=float)
    diff = positions[:, None, :] - positions[None, :, :]
    distance = np.sqrt((diff ** 2).sum(axis=-1))
    adjacency = distance <= delta
    np.fill_diagonal(adjacency, False)
    return adjacency


def generate_er_social_graph(n: int, p_link: float, rng: np.random.Generator) -> np.ndarray:
    """
    Erdos-Renyi social graph: each unordered pair linked independently with ``p_link``.

    The networkx generator is seeded from ``rng``; with a fixed seed the graphs
    for increasing ``p_link`` are nested, since every pair is compared against
    the same uniform draw.
    """
    if not 0.0 <= p_link <= 1.0:
        raise ConfigurationError("[topology] p_link", f"link probability must lie in [0, 1], got {p_link!r}")
    seed = int(rng.integers(0, 2 ** 32))
    graph = nx.gnp_random_graph(n, p_link, seed=seed)
    return nx.to_numpy_array(graph, nodelist=range(n), dtype=bool)


@dataclass(frozen=True)
class EdgeListTrace:
    """A parsed friendship network: the graph plus node ids in first-seen order."""
    graph: nx.Graph
    node_order: Tuple[int, ...]


def parse_edgelist(lines: Iterable[str]) -> EdgeListTrace:
    """
    Parse whitespace-separated ``u v`` lines; ``#`` comments and blank lines are skipped.

    Self-loops are dropped and duplicate or reversed edges collapse into one
    undirected edge. Nodes of self-loops still count as seen.

    Raises:
        EdgeListParseError: On a line that does not hold two nonnegative integers
    """
    graph = nx.Graph()
    order: List[int] = []
    seen = set()
    for line_number, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split()
        if len(fields) < 2:
            raise EdgeListParseError(line_number, line, "expected two node ids")
        try:
            u, v = int(fields[0]), int(fields[1])
        except ValueError:
            raise EdgeListParseError(line_number, line, "node ids must be integers")
        if u < 0 or v < 0:
            raise EdgeListParseError(line_number, line, "node ids must be nonnegative")
        for node in (u, v):
            if node not in seen:
                seen.add(node)
                order.append(node)
                graph.add_node(node)
        if u != v:
            graph.add_edge(u, v)
    return EdgeListTrace(graph=graph, node_order=tuple(order))


@lru_cache(maxsize=8)
def read_edgelist_file(path: Path) -> EdgeListTrace:
    """Parse an edge-list file once per process."""
    logger.info(f"Reading social edge list {path}")
    with open(path, "r", encoding="utf-8") as handle:
        trace = parse_edgelist(handle)
    logger.info(f"Edge list {path.name}: {trace.graph.number_of_nodes()} nodes, "
                f"{trace.graph.number_of_edges()} edges")
    return trace


def load_social_graph_edgelist(
    source: Union[str, Iterable[str], EdgeListTrace],
    n_users: int,
    selection: SelectionPolicy = SelectionPolicy.FIRST_N,
    rng: Optional[np.random.Generator] = None,
    id_map: Optional[Sequence[int]] = None,
) -> Tuple[np.ndarray, Tuple[int, ...]]:
    """
    Social adjacency over ``n_users`` users taken from a friendship edge list.

    Trace nodes are assigned to simulator users either explicitly (``id_map[k]``
    is the trace node of user k), as the first N distinct ids in file order, or
    as N distinct nodes drawn at random from ``rng``. Edges with both endpoints
    retained are kept.

    Args:
        source: Edge-list text, an iterable of lines, or an already parsed trace
        n_users: Number of simulator users N
        selection: ``first-n`` or ``random-n`` (ignored when ``id_map`` is given)
        rng: Random stream for ``random-n``
        id_map: Explicit trace node per simulator user

    Returns:
        (adjacency, assigned trace node ids)

    Raises:
        EdgeListParseError: Malformed line
        ConfigurationError: Fewer distinct trace nodes than ``n_users``, or an
            invalid ``id_map``
    """
    if isinstance(source, EdgeListTrace):
        trace = source
    elif isinstance(source, str):
        trace = parse_edgelist(source.splitlines())
    else:
        trace = parse_edgelist(source)

    available = len(trace.node_order)
    if available < n_users:
        raise ConfigurationError(
            "[topology] edgelist_path",
            f"edge list has {available} distinct nodes, fewer than n_users={n_users}",
        )

    if id_map is not None:
        assigned = tuple(int(x) for x in id_map)
        if len(assigned) != n_users or len(set(assigned)) != n_users or not set(assigned) <= set(trace.node_order):
            raise ConfigurationError(None, f"id_map must list {n_users} distinct trace node ids")
    elif SelectionPolicy(selection) is SelectionPolicy.FIRST_N:
        assigned = trace.node_order[:n_users]
    else:
        if rng is None:
            raise ConfigurationError("[topology] selection", "random-n selection needs a random stream")
        candidates = np.array(sorted(trace.node_order))
        picked = rng.choice(len(candidates), size=n_users, replace=False)
        assigned = tuple(int(candidates[i]) for i in picked)

    adjacency = nx.to_numpy_array(trace.graph.subgraph(assigned), nodelist=assigned, dtype=bool)
    np.fill_diagonal(adjacency, False)
    return adjacency, assigned


def neighbors(adjacency: np.ndarray, user: int) -> frozenset:
    """
    Neighbor set of ``user``; never contains the user itself.

    Raises:
        IndexError: If ``user`` is out of range
    """
    n = adjacency.shape[0]
    if not 0 <= user < n:
        raise IndexError(f"user {user} out of range for {n} users")
    row = np.flatnonzero(adjacency[user])
    return frozenset(int(k) for k in row if k != user)


def neighbor_lists(adjacency: np.ndarray) -> Tuple[Tuple[int, ...], ...]:
    """Sorted neighbor tuples for all users."""
    return tuple(tuple(int(k) for k in np.flatnonzero(adjacency[n])) for n in range(adjacency.shape[0]))
