"""JSON schemas for the element format and the CLI reports."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import jsonschema

REPORTS = (
    "average",
    "classify",
    "classify_algebra",
    "compare",
    "element",
    "error",
    "gen",
    "meta",
    "norm",
    "polar",
    "quotient",
    "simeq",
    "verify_combo",
    "wold",
)


@lru_cache(maxsize=1)
def schema_document() -> dict:
    text = resources.files("cstarext").joinpath("schemas/reports.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


@lru_cache(maxsize=None)
def validator(name: str) -> jsonschema.protocols.Validator:
    if name not in REPORTS:
        raise KeyError(f"no schema named {name!r}")
    doc = dict(schema_document())
    doc["$ref"] = f"#/$defs/{name}"
    cls = jsonschema.validators.validator_for(doc)
    cls.check_schema(doc)
    return cls(doc)


def validate(name: str, obj) -> None:
    """Raise ``jsonschema.ValidationError`` unless ``obj`` matches the named schema."""
    validator(name).validate(obj)
