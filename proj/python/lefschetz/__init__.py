"""Delocalized index pairings on flat orbifold models."""

from ._lefschetz import (
    Config,
    ConfigError,
    constants,
    getzler_order,
    lefschetz0,
    load_config,
    pair,
    parse_config,
    rhs,
    verify,
    verify_groups,
)

__all__ = [
    "Config",
    "ConfigError",
    "constants",
    "getzler_order",
    "lefschetz0",
    "load_config",
    "pair",
    "parse_config",
    "rhs",
    "verify",
    "verify_groups",
]
