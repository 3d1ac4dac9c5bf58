"""Minimum-time quadrotor trajectories along a reference path."""

import json
import tempfile

from ._qmt import ConfigError, ScenarioError, SolverError, beta_nu
from . import _qmt

__all__ = ["ConfigError", "ScenarioError", "SolverError", "beta_nu", "default_config", "validate", "solve"]


def _text(config):
    return config if isinstance(config, str) else json.dumps(config)


def default_config(scenario="tube"):
    return json.loads(_qmt.default_config(scenario))


def validate(config):
    return _qmt.validate(_text(config))


def solve(config, out_dir=None, emit=("summary",), **overrides):
    """Solve a config (dict or JSON text). Overrides: grid, shrink, rounds, v_init, rho.

    Without out_dir the artifacts go to a throwaway directory.
    """
    emit = ",".join(emit)
    if out_dir is None:
        with tempfile.TemporaryDirectory() as tmp:
            out = _qmt.solve(_text(config), tmp, emit=emit, **overrides)
    else:
        out = _qmt.solve(_text(config), str(out_dir), emit=emit, **overrides)
    out["summary"] = json.loads(out["summary"])
    return out
