"""Simple types: the base types ``e`` and ``t`` and right-nested arrows."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union


@dataclass(frozen=True)
class Base:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Arrow:
    dom: SimpleType
    cod: SimpleType

    def __str__(self) -> str:
        dom = f"({self.dom})" if isinstance(self.dom, Arrow) else str(self.dom)
        return f"{dom} -> {self.cod}"


SimpleType = Union[Base, Arrow]

E = Base("e")
T = Base("t")


def arrow(*types: SimpleType) -> SimpleType:
    """``arrow(a, b, c)`` is ``a -> (b -> c)``."""
    if not types:
        raise ValueError("arrow() needs at least one type")
    result = types[-1]
    for ty in reversed(types[:-1]):
        result = Arrow(ty, result)
    return result


def split(ty: SimpleType) -> tuple[list[SimpleType], Base]:
    """Argument types and final base type of ``ty``."""
    args = []
    while isinstance(ty, Arrow):
        args.append(ty.dom)
        ty = ty.cod
    return args, ty


def result_type(ty: SimpleType) -> Base:
    return split(ty)[1]
