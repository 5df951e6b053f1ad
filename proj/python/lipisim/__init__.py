"""Python interface to the lipisim simulator core.

The heavy lifting lives in the C++ extension; this wrapper moves dicts
in and out of its JSON surface.
"""

import json

from lipisim._core import (  # noqa: F401
    bit_reverse,
    default_config,
    find_generator,
    generate_topology,
    is_prime,
    keyed_rand,
    mod_inv,
    mod_pow,
)
from lipisim import _core


def config(**overrides):
    """A full experiment config dict with defaults, updated by overrides."""
    cfg = json.loads(default_config())
    for key, value in overrides.items():
        if key not in cfg:
            raise KeyError(f"unknown config key: {key}")
        cfg[key] = value
    return cfg


def run(**overrides):
    """Runs one experiment; returns {"config": ..., "records": [...]}."""
    return json.loads(_core.run_experiment(json.dumps(config(**overrides))))


def compare(protocols, **overrides):
    """Runs several protocols on one shared topology; returns the stats table."""
    configs = []
    for name in protocols:
        cfg = config(**overrides)
        cfg["protocol"] = name
        configs.append(json.dumps(cfg))
    return json.loads(_core.compare_experiments(configs))


def sweep(axis, values, **overrides):
    """Re-runs a base config along one axis; returns long-form rows."""
    return json.loads(
        _core.sweep_experiment(json.dumps(config(**overrides)), axis, list(values))
    )
