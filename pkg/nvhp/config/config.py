"""
Config module for loading nvhp defaults and parsing run documents
"""

import os
from typing import Any, Dict, List, Optional

import yaml
from pydantic import ValidationError

from nvhp.errors import ConfigError

CONFIG_PATH = os.getenv('NVHP_CONFIG_PATH', os.path.join(os.path.dirname(__file__), 'nvhp.yaml'))

# pydantic error types -> stable error kinds reported to the user
_ERROR_KINDS = {
    "missing": "missing-required",
    "extra_forbidden": "unknown-key",
    "greater_than": "out-of-range",
    "greater_than_equal": "out-of-range",
    "less_than": "out-of-range",
    "less_than_equal": "out-of-range",
    "too_short": "out-of-range",
    "too_long": "out-of-range",
}


def load_config():
    """
    Load nvhp defaults (nvhp/config/nvhp.yaml)
    Returns an empty dict if the file is missing or invalid
    """
    try:
        with open(CONFIG_PATH) as f:
            return yaml.safe_load(f) or {}
    except FileNotFoundError:
        return {}
    except Exception as e:
        print(f"Error loading nvhp config: {e}")
        return {}


def _field_errors(exc: ValidationError) -> List[Dict[str, str]]:
    fields = []
    for err in exc.errors():
        loc = ".".join(str(part) for part in err["loc"])
        kind = _ERROR_KINDS.get(err["type"], "invalid-value")
        # an empty value for a required enum is reported as missing
        if err["type"] == "enum" and err.get("input") in (None, ""):
            kind = "missing-required"
        fields.append({"field": loc, "code": kind, "message": err["msg"]})
    return fields


def parse_config(text: str, defaults: Optional[Dict[str, Any]] = None,
                 overrides: Optional[Dict[str, Any]] = None):
    """
    Parse a YAML run document into a validated RunConfig.

    Physics constants missing from the document are taken from the
    ``physics`` section of the defaults file. All invalid fields are
    reported together in a single ConfigError. ``overrides`` (CLI flags)
    replace top-level keys of the document.
    """
    # imported here to keep the models importable without a config file
    from nvhp.models.models import RunConfig

    try:
        doc = yaml.safe_load(text) if text else None
    except yaml.YAMLError as e:
        raise ConfigError(f"Run document is not valid YAML: {e}",
                          fields=[{"field": "", "code": "invalid-value", "message": str(e)}])

    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("Run document must be a mapping",
                          fields=[{"field": "", "code": "invalid-value",
                                   "message": "top level is not a mapping"}])
    if overrides:
        doc = {**doc, **overrides}

    if defaults is None:
        defaults = load_config()
    physics_defaults = defaults.get("physics") or {}
    if physics_defaults:
        physics = doc.get("physics")
        if physics is None or isinstance(physics, dict):
            doc = {**doc, "physics": {**physics_defaults, **(physics or {})}}

    if doc.get("experiment") in (None, ""):
        # let pydantic report the remaining problems together with this one
        doc = {k: v for k, v in doc.items() if k != "experiment"}

    try:
        return RunConfig.model_validate(doc)
    except ValidationError as e:
        fields = _field_errors(e)
        names = ", ".join(f["field"] or "<root>" for f in fields)
        raise ConfigError(f"Invalid run configuration: {names}", fields=fields)
