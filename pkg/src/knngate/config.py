"""Experiment configuration files (TOML) and run manifests (JSON).

Schema version 1::

    schema_version = 1
    experiment = "trust_limit"      # mode_stability | gate_limit | trust_limit | retriever_limit
    master_seed = 12345

    [scenario]
    weights = [[2.0, 0.0], [-1.0, 1.5], [-1.0, -1.5]]   # one row per label
    offsets = [0.0, 0.0, 0.0]
    norm = "l2"                     # optional: l2 | l1 | linf
    rho = 0.0                       # optional corruption rate
    lipschitz = 1.7                 # optional, must not undercut the certified bound

    [scenario.memory_law]           # optional, default uniform_ball radius 1
    kind = "uniform_ball"           # uniform_ball(radius) | uniform_box(low, high) | gaussian(mean, scale)
    radius = 1.0

    [scenario.q0]                   # bayes | tempered(tau) | shifted(offset) | contaminated(alpha) | permuted(perm)
    kind = "contaminated"
    alpha = 0.5

    [scenario.deformation]          # none | constant_shift(shift) | radial_push(t)
    kind = "none"

    [scenario.spurious]             # uniform | point_mass(label)
    kind = "uniform"

    [sweep]
    n_grid = [2000, 20000, 200000]
    beta = 0.6                      # or k = [...] with one entry per n
    reps = 200
    queries = [[0.25, 0.1]]         # or query_count = 4 to sample through the deformation
    zeta = 1.0
    delta = 0.3
    bandwidth = 1.0
    threads = 1
"""
import json
import sys

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .experiments import SweepConfig, sample_queries
from .scenarios import Scenario

CONFIG_SCHEMA_VERSION = 1

_TOP_KEYS = {"schema_version", "experiment", "master_seed", "scenario", "sweep"}
_SCENARIO_KEYS = {"weights", "offsets", "norm", "rho", "lipschitz", "memory_law", "q0",
                  "deformation", "spurious"}
_SWEEP_KEYS = {"n_grid", "beta", "k", "reps", "queries", "query_count", "zeta", "delta",
               "bandwidth", "threads"}


class ConfigError(ValueError):
    pass


def _require(table, key, where):
    if key not in table:
        raise ConfigError(f"missing required key '{where}{key}'")
    return table[key]


def _check_keys(table, allowed, where):
    for key in table:
        if key not in allowed:
            raise ConfigError(f"unknown key '{where}{key}'")


def parse_config_text(text, source="<config>"):
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return config_from_dict(data)


def load_config(path):
    """Read a TOML config, or the resolved config stored in a run manifest."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if str(path).endswith(".json"):
        try:
            manifest = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return config_from_resolved(_require(manifest, "resolved_config", ""))
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError(f"{path}: not UTF-8 text ({exc})") from None
    return parse_config_text(text, str(path))


def config_from_dict(data):
    _check_keys(data, _TOP_KEYS, "")
    version = _require(data, "schema_version", "")
    if version != CONFIG_SCHEMA_VERSION:
        raise ConfigError(f"'schema_version' is {version!r}; this tool reads version "
                          f"{CONFIG_SCHEMA_VERSION}")
    experiment = _require(data, "experiment", "")
    seed = _require(data, "master_seed", "")
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("'master_seed' must be an integer")
    scenario = scenario_from_dict(_require(data, "scenario", ""))
    sweep = _require(data, "sweep", "")
    _check_keys(sweep, _SWEEP_KEYS, "sweep.")
    n_grid = _require(sweep, "n_grid", "sweep.")
    if "queries" in sweep and "query_count" in sweep:
        raise ConfigError("give either 'sweep.queries' or 'sweep.query_count', not both")
    if "queries" in sweep:
        queries = sweep["queries"]
    elif "query_count" in sweep:
        queries = sample_queries(scenario, int(sweep["query_count"]), seed)
    else:
        raise ConfigError("missing required key 'sweep.queries' (or 'sweep.query_count')")
    kwargs = {key: sweep[key] for key in ("beta", "reps", "zeta", "delta", "bandwidth",
                                            "threads") if key in sweep}
    if "k" in sweep:
        kwargs["k_list"] = sweep["k"]
    try:
        return SweepConfig(experiment=experiment, scenario=scenario, n_grid=n_grid,
                           queries=queries, master_seed=seed, **kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid sweep: {exc}") from None


def scenario_from_dict(table):
    _check_keys(table, _SCENARIO_KEYS, "scenario.")
    _require(table, "weights", "scenario.")
    _require(table, "offsets", "scenario.")
    try:
        return Scenario.from_dict(table)
    except KeyError as exc:
        raise ConfigError(f"scenario.{exc.args[0]}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario: {exc}") from None


def config_from_resolved(data):
    """Rebuild a config from ``SweepConfig.to_dict`` output (as stored in manifests)."""
    try:
        return SweepConfig(
            experiment=data["experiment"],
            scenario=Scenario.from_dict(data["scenario"]),
            n_grid=data["n_grid"],
            k_list=data["k_list"],
            queries=data["queries"],
            reps=data["reps"],
            zeta=data["zeta"],
            delta=data["delta"],
            bandwidth=data["bandwidth"],
            master_seed=data["master_seed"],
        )
    except KeyError as exc:
        raise ConfigError(f"missing required key 'resolved_config.{exc.args[0]}'") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid resolved config: {exc}") from None


def dump_scenario(scenario):
    """TOML text for a ``[scenario]`` table."""
    data = scenario.to_dict()
    return tomli_w.dumps({"scenario": data})


def dump_config(config):
    """TOML text that parses back to an equivalent config."""
    sweep = {
        "n_grid": list(config.n_grid),
        "reps": config.reps,
        "queries": [list(q) for q in config.queries],
        "zeta": config.zeta,
        "delta": config.delta,
        "bandwidth": config.bandwidth,
        "threads": config.threads,
    }
    if config.k_list is not None:
        sweep["k"] = list(config.k_list)
    else:
        sweep["beta"] = config.beta
    doc = {
        "schema_version": CONFIG_SCHEMA_VERSION,
        "experiment": config.experiment,
        "master_seed": config.master_seed,
        "scenario": config.scenario.to_dict(),
        "sweep": sweep,
    }
    return tomli_w.dumps(doc)
