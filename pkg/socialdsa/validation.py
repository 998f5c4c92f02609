"""
Oracle and invariant suites behind ``socialdsa validate``.

Every suite takes a ``scale`` factor (1.0 = full acceptance size) so the test
suite can run the same code on a few instances, and a seed so that reruns
check the same instances.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy.stats import norm

from common.logging_utils.logging_config import get_logger

from . import learn
from .channel import ChannelParams, FadingKind, idle_fraction_standard_error, simulate_channels
from .engine import Simulator, learning_context
from .errors import ConfigurationError
from .game import (GameInstance, StrategyProfile, brute_force_nash_set, potential_sign_violations, solve_nash,
                   tabulate_game, verify_nash)
from .sim_config import Policy, SimConfig

logger = get_logger('validation')


@dataclass
class SuiteReport:
    name: str
    passed: int = 0
    failed: int = 0
    failures: List[str] = field(default_factory=list)

    def record(self, ok: bool, description: str):
        if ok:
            self.passed += 1
        else:
            self.failed += 1
            self.failures.append(description)
            logger.warning(f"{self.name}: FAILED {description}")

    @property
    def ok(self) -> bool:
        return self.failed == 0


def _count(full: int, scale: float) -> int:
    return max(1, int(round(full * scale)))


def family_critical_value(n_checks: int, n_stderr: float = 3.0) -> float:
    """
    Per-check z threshold that keeps the chance of any false alarm among
    ``n_checks`` independent checks at the level of one ``n_stderr`` check
    (Sidak correction). One check gives back ``n_stderr``.
    """
    family_level = 2.0 * norm.sf(n_stderr)
    per_check = -math.expm1(math.log1p(-family_level) / max(n_checks, 1))
    return float(norm.isf(per_check / 2.0))



def random_game(rng: np.random.Generator, max_users: int = 6, max_channels: int = 3) -> GameInstance:
    """A random stage game with N <= max_users and M <= max_channels."""
    n = int(rng.integers(1, max_users + 1))
    m = int(rng.integers(1, max_channels + 1))
    upper = np.triu(rng.random((n, n)) < 0.5, k=1)
    return GameInstance(
        interference=upper | upper.T,
        contention=rng.uniform(0.05, 0.95, size=n),
        means=rng.uniform(1.0, 50.0, size=(n, m)),
        idle_probs=rng.uniform(0.05, 0.95, size=(n, m)),
    )


def potential_oracle(scale: float = 1.0, seed: int = 0) -> SuiteReport:
    """Sign of every unilateral utility change matches the potential change."""
    report = SuiteReport("potential-oracle")
    rng = np.random.default_rng(seed)
    for k in range(_count(500, scale)):
        game = random_game(rng)
        violations = potential_sign_violations(game)
        report.record(violations == 0, f"instance {k} (N={game.n_users}, M={game.n_channels}): "
                                       f"{violations} sign violation(s)")
    return report


def nash_oracle(scale: float = 1.0, seed: int = 0) -> SuiteReport:
    """The solver's profile is a verified member of the enumerated equilibrium set."""
    report = SuiteReport("nash-oracle")
    rng = np.random.default_rng(seed)
    for k in range(_count(500, scale)):
        game = random_game(rng)
        equilibria = brute_force_nash_set(game, tabulate_game(game))
        start = StrategyProfile(rng.integers(0, game.n_channels, size=game.n_users))
        solution = solve_nash(game, start)
        ok = solution.converged and solution.profile.choices in equilibria and verify_nash(game, solution.profile)
        report.record(ok, f"instance {k}: solver returned {solution.profile.choices}, "
                          f"{len(equilibria)} enumerated equilibria")
    return report


def stationary(scale: float = 1.0, seed: int = 0) -> SuiteReport:
    """Long-run idle frequency of each channel lies within 3 standard errors of lambda / (lambda + mu)."""
    report = SuiteReport("stationary")
    params = [ChannelParams(0, 0.2, 0.2), ChannelParams(1, 0.1, 0.3), ChannelParams(2, 0.05, 0.5),
              ChannelParams(3, 0.7, 0.6)]
    n_slots = _count(1_000_000, scale)
    trace = simulate_channels(params, n_slots, np.random.default_rng(seed))
    for p, fraction in zip(params, trace.idle_fraction):
        se = idle_fraction_standard_error(p, n_slots)
        report.record(abs(fraction - p.gamma) < 3 * se,
                      f"channel lambda={p.lam}, mu={p.mu}: idle fraction {fraction:.6f} vs {p.gamma:.6f} (se {se:.2e})")
    return report


def small_learning_config(rng: np.random.Generator, horizon: int, seed: int, index: int = 0) -> SimConfig:
    """
    A small weak-mode instance (N <= 4, M <= 3, constant fading, normalized
    payoffs). Its beta is replaced by half the contraction bound once the
    interference degree is known.

    Channels are persistent (lambda + mu < 1), so an idle or busy
    recommendation moves the next-slot idle probability away from gamma.
    Instance 0 uses lambda = mu = 0.2 on every channel; later instances draw
    both from [0.1, 0.3].
    """
    n = int(rng.integers(2, 5))
    m = int(rng.integers(1, 4))
    if index == 0:
        lambdas = mus = (0.2,) * m
    else:
        lambdas = tuple(float(x) for x in rng.uniform(0.1, 0.3, size=m))
        mus = tuple(float(x) for x in rng.uniform(0.1, 0.3, size=m))
    return SimConfig(
        n_users=n, n_channels=m, horizon_slots=horizon, replications=1, seed=seed,
        policy=Policy.WEAK, lambdas=lambdas, mus=mus,
        fading=FadingKind.CONSTANT, area_side=150.0, delta=100.0, p_link=0.5,
        beta=1.0, normalize_payoffs=True, warmup_fraction=0.0, residual_samples=0,
    )


def informed_state_gap(table: learn.PerceptionTable, min_visits: int = 20) -> Optional[float]:
    """
    Mean of V[n, m, +1] - V[n, m, -1] over the (user, channel) pairs whose
    idle- and busy-recommended cells both have ``min_visits`` visits; None
    when no pair qualifies.
    """
    idle, busy = learn.state_axis(1), learn.state_axis(-1)
    both = (table.counts[:, :, idle] >= min_visits) & (table.counts[:, :, busy] >= min_visits)
    if not both.any():
        return None
    return float((table.values[:, :, idle] - table.values[:, :, busy])[both].mean())


def _with_contraction_beta(config: SimConfig, simulator: Simulator) -> SimConfig:
    degree = simulator.scenario.topology.interference_degree_max
    check = learn.check_contraction_condition(1.0, degree, 1.0)
    beta = 1.0 if math.isinf(check.bound) else 0.5 * check.bound
    return config.with_axis("beta", beta)


def _learned_simulator(config: SimConfig, snapshot_every: int = 0):
    scout = Simulator(config, 0)
    config = _with_contraction_beta(config, scout)
    simulator = Simulator(config, 0)
    snapshots = []
    for t in range(config.horizon_slots):
        if snapshot_every and t % snapshot_every == 0:
            snapshots.append(simulator.state.perceptions.copy())
        simulator.run_slot()
    return simulator, snapshots


def contraction(scale: float = 1.0, seed: int = 0) -> SuiteReport:
    """
    Closed-form checks of the contraction condition, then windowed max-norm
    perception changes that shrink on instances satisfying it.
    """
    report = SuiteReport("contraction")
    check = learn.check_contraction_condition(50.0, 5, 0.001)
    report.record(check.satisfied and math.isclose(check.bound, 0.002) and math.isclose(check.modulus, 0.5),
                  f"B_max=50, degree 5, beta=0.001 gave {check}")
    check = learn.check_contraction_condition(50.0, 5, 3.0)
    report.record(not check.satisfied and math.isclose(check.modulus, 1500.0),
                  f"B_max=50, degree 5, beta=3 gave {check}")
    check = learn.check_contraction_condition(50.0, 0, 1e6)
    report.record(check.satisfied and math.isinf(check.bound), f"degree 0 gave {check}")

    rng = np.random.default_rng(seed)
    horizon = _count(20_000, scale)
    window = max(1, horizon // 10)
    for k in range(_count(5, scale)):
        config = small_learning_config(rng, horizon, seed + k, index=k)
        simulator, snapshots = _learned_simulator(config, snapshot_every=window)
        snapshots.append(simulator.state.perceptions.copy())
        changes = [learn.max_norm_change(a.values[a.visited], b.values[a.visited])
                   for a, b in zip(snapshots[1:], snapshots[2:])]
        ok = len(changes) < 2 or changes[-1] <= changes[0]
        report.record(ok, f"instance {k}: window changes {['%.3g' % c for c in changes]}")
    return report


def fixed_point(scale: float = 1.0, seed: int = 0) -> SuiteReport:
    """
    After learning, visited cells agree with the operator within the
    family-wise 3-standard-error level, and perceptions under an idle
    recommendation exceed those under a busy one.
    """
    report = SuiteReport("fixed-point")
    rng = np.random.default_rng(seed)
    for k in range(_count(5, scale)):
        config = small_learning_config(rng, _count(100_000, scale), seed + k, index=k)
        simulator, _ = _learned_simulator(config)
        table = simulator.state.perceptions
        residual = learn.fixed_point_residual(learning_context(simulator), table, _count(20_000, scale), rng)
        critical = family_critical_value(len(residual.cells))
        worst = max(residual.cells, key=lambda c: c.z_score, default=None)
        report.record(residual.within(critical),
                      f"instance {k}: residual {residual.residual:.4g}, max z {residual.max_z_score:.3g} "
                      f"(critical {critical:.3g}), worst cell {worst}")
        gap = informed_state_gap(table)
        if gap is not None:
            report.record(gap > 0, f"instance {k}: idle-recommended perceptions trail busy-recommended ones "
                                   f"by {-gap:.4g} on average")
    return report


def gap_bound(scale: float = 1.0, seed: int = 0) -> SuiteReport:
    """Boltzmann shortfall against the best channel stays below ln(M) / beta."""
    report = SuiteReport("gap-bound")
    rng = np.random.default_rng(seed)
    for k in range(_count(3, scale)):
        config = small_learning_config(rng, _count(50_000, scale), seed + k, index=k)
        simulator, _ = _learned_simulator(config)
        context = learning_context(simulator)
        table = simulator.state.perceptions
        gaps = []
        for user in range(config.n_users):
            for rec_state in np.unique(context.rec_state_pool[:, user, :], axis=0):
                gap = learn.boltzmann_gap(context, table, user, rec_state, context.beta, _count(5_000, scale), rng)
                gaps.append((user, tuple(int(s) for s in rec_state), gap))
        critical = family_critical_value(len(gaps))
        for user, rec_state, gap in gaps:
            report.record(gap.within(critical), f"instance {k}, user {user}, state {rec_state}: "
                                                f"gap {gap.gap:.4g} > bound {gap.bound:.4g}")
    return report


SUITES: Dict[str, Callable[..., SuiteReport]] = {
    "potential-oracle": potential_oracle,
    "nash-oracle": nash_oracle,
    "contraction": contraction,
    "fixed-point": fixed_point,
    "stationary": stationary,
    "gap-bound": gap_bound,
}


def run_suite(name: str, scale: float = 1.0, seed: int = 0) -> SuiteReport:
    """
    Raises:
        ConfigurationError: If ``name`` is not a known suite
    """
    if name not in SUITES:
        raise ConfigurationError("suite", f"unknown suite {name!r}; valid suites: {', '.join(SUITES)}")
    logger.info(f"Running suite {name} (scale {scale}, seed {seed})")
    report = SUITES[name](scale=scale, seed=seed)
    logger.info(f"Suite {name}: {report.passed} passed, {report.failed} failed")
    return report
