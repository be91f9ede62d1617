"""Exception types shared across the package."""

from __future__ import annotations


class HypergraphError(ValueError):
    """Invalid hypergraph input (bad indices, empty edges, isolated vertices for duality)."""


class ResourceError(RuntimeError):
    """A configured size cap would be exceeded (enumeration, dense or exact cap)."""


def check_cap(value: int, cap: int, what: str) -> None:
    if value > cap:
        raise ResourceError(f"{what} = {value} exceeds cap {cap}")
