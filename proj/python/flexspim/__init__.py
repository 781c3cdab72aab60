"""Python access to the flexspim simulator core."""

import json as _json

from ._flexspim import (  # noqa: F401
    ConfigError,
    Layer,
    Model,
    ModelError,
    ParseError,
    default_calibration_hash,
    load_workload,
    parse_workload,
    peak_throughput,
    policies,
    verify,
)
from . import _flexspim

__version__ = "0.1.0"


def plan(model, policy="hs-opt", n_macros=16):
    """Dataflow plan as a dict (per-layer stationarity, streamed bits, macro use)."""
    return _json.loads(_flexspim.plan_json(model, policy, n_macros))


def simulate(model, events=None, policy="hs-opt", n_macros=16, density=0.2, seed=1, check_reference=False):
    """Run on simulated macros.

    events is a list of (t, c, x, y); when None a stream is drawn from `seed`
    at the given per-input spike density.
    """
    return _json.loads(
        _flexspim.simulate_json(model, events, policy, n_macros, density, seed, check_reference)
    )


def estimate(model, sparsity=0.9, policy="hs-opt", n_macros=16):
    """Analytic energy report (pJ) plus gains against the fixed-precision baselines."""
    return _json.loads(_flexspim.estimate_json(model, sparsity, policy, n_macros))
