"""
Result rows and their CSV form.

One row per (sweep point, policy). Floats are written with 12 significant
digits; missing diagnostics (NaN) are written as empty fields.
"""

import csv
import dataclasses
import hashlib
import io
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, List

from common.logging_utils.logging_config import get_logger
from common.utils.file_write_utils import atomic_write_text

from .engine import PointSummary
from .sim_config import SimConfig, SocialGraphKind

logger = get_logger('cli')


@dataclass(frozen=True)
class ResultRow:
    experiment_id: str
    axis: str
    axis_value: float
    policy: str
    n_users: int
    n_channels: int
    p_link: float
    delta: float
    beta: float
    p_rec: float
    mean_throughput_mbps: float
    stderr_mbps: float
    mean_iterations: float
    max_iterations: float
    within_budget_fraction: float
    contraction_modulus: float
    fixed_point_residual_mbps: float
    social_links: float
    replications: int
    seed: int
    config_hash: str
    social_graph: str

    def __post_init__(self):
        if self.stderr_mbps < 0:
            raise ValueError(f"standard error must be >= 0, got {self.stderr_mbps}")

    @classmethod
    def from_summary(cls, summary: PointSummary) -> "ResultRow":
        config = summary.config
        return cls(
            experiment_id=config.experiment_id,
            axis=summary.axis or "",
            axis_value=math.nan if summary.value is None else float(summary.value),
            policy=summary.policy.value,
            n_users=config.n_users,
            n_channels=config.n_channels,
            p_link=config.p_link,
            delta=config.delta,
            beta=config.beta,
            p_rec=config.p_rec,
            mean_throughput_mbps=summary.mean_throughput,
            stderr_mbps=summary.stderr,
            mean_iterations=summary.mean_iterations,
            max_iterations=summary.max_iterations,
            within_budget_fraction=summary.within_budget,
            contraction_modulus=summary.contraction_modulus,
            fixed_point_residual_mbps=summary.residual,
            social_links=summary.social_links,
            replications=len(summary.replications),
            seed=config.seed,
            config_hash=config_hash(config),
            social_graph=describe_social_graph(config),
        )


COLUMNS = tuple(f.name for f in dataclasses.fields(ResultRow))
_TYPES = {f.name: f.type for f in dataclasses.fields(ResultRow)}


def describe_social_graph(config: SimConfig) -> str:
    if config.social_graph is SocialGraphKind.ER:
        return "er"
    return f"edgelist:{Path(config.edgelist_path).name}:{config.selection.value}"


def _canonical(value):
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return value.as_posix()
    if isinstance(value, tuple):
        return [_canonical(v) for v in value]
    return value


def config_hash(config: SimConfig) -> str:
    """Short digest of every configuration field, for provenance."""
    payload = {f.name: _canonical(getattr(config, f.name)) for f in dataclasses.fields(config)}
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def _format(value) -> str:
    if isinstance(value, float):
        return "" if math.isnan(value) else f"{value:.12g}"
    return str(value)


def _parse(name: str, text: str):
    kind = _TYPES[name]
    if kind in (float, "float"):
        return math.nan if text == "" else float(text)
    if kind in (int, "int"):
        return int(text)
    return text


def rows_to_csv(rows: Iterable[ResultRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_format(getattr(row, name)) for name in COLUMNS])
    return buffer.getvalue()


def rows_from_csv(text: str) -> List[ResultRow]:
    """
    Raises:
        ValueError: If the header differs from the fixed column set
    """
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if tuple(header or ()) != COLUMNS:
        raise ValueError(f"unexpected result header {header!r}")
    return [ResultRow(**{name: _parse(name, field) for name, field in zip(COLUMNS, record)})
            for record in reader if record]


def write_results(rows: Iterable[ResultRow], path: Path) -> Path:
    rows = list(rows)
    destination = atomic_write_text(path, rows_to_csv(rows))
    logger.info(f"Wrote {len(rows)} result row(s) to {destination}")
    return destination
