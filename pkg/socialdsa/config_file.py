"""
Config-file parsing.

Configs are INI documents with five flat sections. Every key is optional
unless marked required; list values are comma-separated.

[channels]
    n_channels        (required) number of primary channels M
    lambda            (required) busy->idle probability; one value for all channels or one per channel
    mu                (required) idle->busy probability; same shape rules as lambda
    fading            exponential | constant                              (exponential)

[users]
    n_users           (required) number of secondary users N
    contention_probs  set p_n is drawn from                                (0.1, 0.2, 0.3)
    throughput_means  set of mean rates in Mbps B[n][m] is drawn from     (10, 20, 30, 40, 50)
    per_user_means    one mean per user instead of per (user, channel)    (false)

[topology]
    area_side         side of the square deployment area, m               (500)
    delta             interference range, m                               (100)
    social_graph      er | edgelist                                       (er)
    p_link            Erdos-Renyi link probability                        (0.2)
    edgelist_path     friendship edge list; relative to the config file
    selection         first-n | random-n                                  (random-n)

[policy]
    policy            strong | weak | static_rec | belief                 (strong)
    compare           further policies run on the same random numbers     (none)
    beta              Boltzmann inverse temperature                       (3)
    alpha_schedule    per-cell-harmonic | global-harmonic | constant      (per-cell-harmonic)
    alpha0            step size of the constant schedule                  (0.1)
    initial_value     initial perception value                            (1)
    normalize_payoffs divide payoffs by B_max before learning             (false)
    p_rec             static-recommendation branching probability         (0.5)
    fusion            or | majority                                       (or)
    include_own_report fold the user's own sensing result into its state  (true)

[run]
    experiment_id     label copied into result rows                       (config file stem)
    horizon_slots     slots per replication                               (5000)
    replications      replications per sweep point                        (20)
    seed              master seed                                         (12345)
    warmup_fraction   leading fraction of slots left out of averages      (0.1)
    max_rounds        Nash solver round limit                             (100)
    iteration_budget  iteration count of the convergence-speed statistic  (30)
    pool_size         recommendation states kept for learner diagnostics  (256)
    residual_samples  samples per cell of the fixed-point residual, 0=off (200)
    sweep             one of p_link, delta, n_users, beta, p_rec
    sweep_values      values of the swept axis
"""

import configparser
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple, Union

from common.logging_utils.logging_config import get_logger
from common.utils.file_sys_utils import resolve_path

from .channel import FadingKind
from .engine import SweepSpec
from .errors import ConfigurationError
from .learn import AlphaSchedule
from .recommend import FusionKind
from .sim_config import Policy, SimConfig, SocialGraphKind, canonical_axis
from .topology import SelectionPolicy

logger = get_logger('cli')

PRESET_DIR = Path(__file__).resolve().parent / "presets"
PRESETS = ("link-probability", "interference-range", "trace-users", "temperature", "solver-iterations")
# older preset names, still accepted by --config
PRESET_ALIASES = {
    "paper-fig7": "link-probability",
    "paper-fig8": "interference-range",
    "paper-fig9": "trace-users",
    "paper-beta": "temperature",
}

TRUE_VALUES = ("true", "1", "yes", "on")
FALSE_VALUES = ("false", "0", "no", "off")


def _int(text: str) -> int:
    return int(text)


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in TRUE_VALUES:
        return True
    if lowered in FALSE_VALUES:
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _floats(text: str) -> Tuple[float, ...]:
    return tuple(float(item) for item in text.split(",") if item.strip())


def _words(text: str) -> Tuple[str, ...]:
    return tuple(item.strip() for item in text.split(",") if item.strip())


def _choice(kind) -> Callable:
    def convert(text: str):
        try:
            return kind(text.strip())
        except ValueError:
            raise ValueError(f"expected one of {', '.join(k.value for k in kind)}")
    return convert


def _policies(text: str) -> Tuple[Policy, ...]:
    return tuple(_choice(Policy)(word) for word in _words(text))


# section -> key -> (SimConfig field, converter)
SCHEMA: Dict[str, Dict[str, Tuple[str, Callable]]] = {
    "channels": {
        "n_channels": ("n_channels", _int),
        "lambda": ("lambdas", _floats),
        "mu": ("mus", _floats),
        "fading": ("fading", _choice(FadingKind)),
    },
    "users": {
        "n_users": ("n_users", _int),
        "contention_probs": ("contention_choices", _floats),
        "throughput_means": ("throughput_choices", _floats),
        "per_user_means": ("per_user_means", _bool),
    },
    "topology": {
        "area_side": ("area_side", float),
        "delta": ("delta", float),
        "social_graph": ("social_graph", _choice(SocialGraphKind)),
        "p_link": ("p_link", float),
        "edgelist_path": ("edgelist_path", str.strip),
        "selection": ("selection", _choice(SelectionPolicy)),
    },
    "policy": {
        "policy": ("policy", _choice(Policy)),
        "compare": ("compare", _policies),
        "beta": ("beta", float),
        "alpha_schedule": ("alpha_schedule", _choice(AlphaSchedule)),
        "alpha0": ("alpha0", float),
        "initial_value": ("initial_value", float),
        "normalize_payoffs": ("normalize_payoffs", _bool),
        "p_rec": ("p_rec", float),
        "fusion": ("fusion", _choice(FusionKind)),
        "include_own_report": ("include_own_report", _bool),
    },
    "run": {
        "experiment_id": ("experiment_id", str.strip),
        "horizon_slots": ("horizon_slots", _int),
        "replications": ("replications", _int),
        "seed": ("seed", _int),
        "warmup_fraction": ("warmup_fraction", float),
        "max_rounds": ("max_rounds", _int),
        "iteration_budget": ("iteration_budget", _int),
        "pool_size": ("pool_size", _int),
        "residual_samples": ("residual_samples", _int),
        "sweep": (None, _words),
        "sweep_values": (None, _floats),
    },
}

REQUIRED = (("channels", "n_channels"), ("channels", "lambda"), ("channels", "mu"), ("users", "n_users"))


def parse_experiment(text: str, base_dir: Optional[Path] = None,
                     experiment_id: Optional[str] = None) -> Tuple[SimConfig, SweepSpec]:
    """
    Parse a config document into a validated SimConfig and its sweep.

    Args:
        text: INI document
        base_dir: Directory relative edge-list paths resolve against
        experiment_id: Default experiment label when ``[run] experiment_id`` is absent

    Raises:
        ConfigurationError: Unknown section or key, missing required key,
            unparseable or out-of-range value, multi-axis sweep
    """
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigurationError(None, f"malformed config document: {e}")

    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigurationError(f"[{section}]", f"unknown section; valid sections: {', '.join(SCHEMA)}")
        for key in parser[section]:
            if key not in SCHEMA[section]:
                raise ConfigurationError(f"[{section}] {key}", "unknown key")
    for section, key in REQUIRED:
        if not parser.has_option(section, key):
            raise ConfigurationError(f"[{section}] {key}", "missing required key")

    values = {}
    for section in parser.sections():
        for key, raw in parser[section].items():
            _, convert = SCHEMA[section][key]
            try:
                values[(section, key)] = convert(raw)
            except ValueError as e:
                raise ConfigurationError(f"[{section}] {key}", f"cannot parse {raw!r}: {e}")

    fields = {SCHEMA[s][k][0]: v for (s, k), v in values.items() if SCHEMA[s][k][0] is not None}
    n_channels = fields["n_channels"]
    for name in ("lambdas", "mus"):
        if len(fields[name]) == 1:
            fields[name] = fields[name] * n_channels
    if "edgelist_path" in fields:
        fields["edgelist_path"] = (resolve_path(fields["edgelist_path"], base_dir) if base_dir is not None
                                   else Path(fields["edgelist_path"]))
    if experiment_id is not None:
        fields.setdefault("experiment_id", experiment_id)

    config = SimConfig(**fields).validate()

    sweep = _parse_sweep(values)
    sweep.points(config)
    return config, sweep


def _parse_sweep(values) -> SweepSpec:
    axes = values.get(("run", "sweep"), ())
    sweep_values = values.get(("run", "sweep_values"), ())
    if not axes:
        if sweep_values:
            raise ConfigurationError("[run] sweep_values", "given without [run] sweep")
        return SweepSpec()
    return SweepSpec.from_axes({canonical_axis(axis): sweep_values for axis in axes})


def parse_config(text: str, base_dir: Optional[Path] = None) -> SimConfig:
    """Validated SimConfig of a config document (its sweep, if any, is ignored)."""
    return parse_experiment(text, base_dir)[0]


def resolve_config_path(name_or_path: Union[str, Path]) -> Path:
    """
    A shipped preset name (or one of its aliases) resolves to
    ``presets/<name>.ini``; anything else is taken as a file path.
    """
    name_or_path = PRESET_ALIASES.get(str(name_or_path), name_or_path)
    if str(name_or_path) in PRESETS:
        return PRESET_DIR / f"{name_or_path}.ini"
    return Path(name_or_path)


def load_config(name_or_path: Union[str, Path]) -> Tuple[SimConfig, SweepSpec]:
    """
    Read and parse a config file or preset.

    Raises:
        OSError: If the file cannot be read
        ConfigurationError: If its content is invalid
    """
    path = resolve_config_path(name_or_path)
    logger.debug(f"Loading config {path}")
    text = path.read_text(encoding="utf-8")
    return parse_experiment(text, base_dir=path.resolve().parent, experiment_id=path.stem)
