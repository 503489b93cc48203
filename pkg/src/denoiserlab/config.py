"""Experiment configuration: YAML files plus dotted-path flag overrides.

A config has four sections (dataset, denoiser, sampler, verify) and an
output directory. Flags override fields one-to-one with dotted paths, for
example ``--set sampler.steps=25``.
"""

from __future__ import annotations

import copy
from pathlib import Path

import yaml

from .errors import ValidationError


def load_config(path: str | Path) -> dict:
    with open(path) as fh:
        cfg = yaml.safe_load(fh)
    if not isinstance(cfg, dict):
        raise ValidationError(f"config {path} must be a mapping")
    return cfg


def apply_overrides(cfg: dict, overrides: list[str]) -> dict:
    """Apply ``a.b.c=value`` overrides; values parse as YAML scalars."""
    out = copy.deepcopy(cfg)
    for item in overrides or []:
        if "=" not in item:
            raise ValidationError(f"override {item!r} is not of the form path=value")
        dotted, raw = item.split("=", 1)
        keys = dotted.strip().split(".")
        node = out
        for key in keys[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ValidationError(f"override path {dotted!r} crosses a non-mapping")
        node[keys[-1]] = yaml.safe_load(raw)
    return out


def section(cfg: dict, name: str, required: bool = True) -> dict:
    sec = cfg.get(name)
    if sec is None:
        if required:
            raise ValidationError(f"config is missing the {name!r} section")
        return {}
    if not isinstance(sec, dict):
        raise ValidationError(f"config section {name!r} must be a mapping")
    return sec
