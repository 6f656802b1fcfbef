"""Fractional nonholonomic geometry."""

import json as _json

from ._core import FrangoError, UsageError, caputo, mittag_leffler, schema_version
from . import _core

__all__ = ["FrangoError", "UsageError", "caputo", "mittag_leffler", "run", "summary", "schema_version"]


def _text(config):
    return config if isinstance(config, str) else _json.dumps(config)


def run(config, base_dir="."):
    """Run a config (dict or JSON text) and return the structured report as a dict."""
    return _json.loads(_core.run_json(_text(config), str(base_dir)))


def summary(config, base_dir="."):
    """Run a config and return the summary CSV text."""
    return _core.run_summary(_text(config), str(base_dir))
