"""Incremental cross-file index of unions, switches, chains and mappings."""

from vibeguard.index.build import (
    Resolver,
    build_index,
    resolve_union,
    update_index,
)
from vibeguard.index.model import (
    CodebaseIndex,
    ComparisonChain,
    IndexConfig,
    LiteralFamily,
    MappingLiteral,
    SwitchSite,
    UnionType,
)

__all__ = [
    "CodebaseIndex",
    "ComparisonChain",
    "IndexConfig",
    "LiteralFamily",
    "MappingLiteral",
    "Resolver",
    "SwitchSite",
    "UnionType",
    "build_index",
    "resolve_union",
    "update_index",
]
