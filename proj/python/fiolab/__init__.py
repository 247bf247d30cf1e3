"""Oscillatory integral operators: order thresholds, application and norm sweeps."""

import json
import os
import tempfile

from ._core import (
    Error,
    NumericError,
    ValidationError,
    __version__,
    apply_fio,
    conjugate_exponent,
    general_fio_threshold,
    inf,
    l2_threshold,
    m_bar,
    m_script,
    psido_threshold,
    scenario_tags,
    set_worker_threads,
    worker_threads,
)
from . import _core

__all__ = [
    "Error",
    "NumericError",
    "ValidationError",
    "admissibility",
    "apply_fio",
    "conjugate_exponent",
    "general_fio_threshold",
    "inf",
    "l2_threshold",
    "linear_thresholds",
    "m_bar",
    "m_script",
    "psido_threshold",
    "run",
    "scenario_tags",
    "set_worker_threads",
    "sweep",
    "worker_threads",
]


def linear_thresholds(n, rho, p, q, m=None):
    """Threshold report for a linear operator as a dict."""
    return json.loads(_core.linear_thresholds_json(n, rho, p, q, m))


def admissibility(scenario, **inputs):
    """Threshold report for any scenario tag as a dict."""
    return json.loads(_core.admissibility_json(scenario, **inputs))


def sweep(amplitude, phase, **options):
    """Dyadic norm sweep of built-in operators as a dict."""
    return json.loads(_core.sweep_json(amplitude, phase, **options))


def run(command, config=None, args=()):
    """Runs a CLI command; returns (exit code, report dict or None, stderr).

    A config dict is written to a temporary file and passed as --config.
    """
    argv = [command, *args]
    path = None
    if config is not None:
        fd, path = tempfile.mkstemp(suffix=".json")
        with os.fdopen(fd, "w") as fh:
            json.dump(config, fh)
        argv += ["--config", path]
    try:
        code, out, err = _core.run_cli(argv)
    finally:
        if path:
            os.unlink(path)
    report = json.loads(out) if code == 0 and out.strip() else None
    return code, report, err
