"""The standard gate library shipped as QGL source."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

from ..qgl import load_qgl_file
from ..symbolic.matrix import UnitaryExprMatrix

__all__ = ["prelude_source", "standard_gates", "gate", "load_library"]


def prelude_source() -> str:
    return resources.files(__package__).joinpath("prelude.qgl").read_text(encoding="utf-8")


@lru_cache(maxsize=1)
def standard_gates() -> dict[str, UnitaryExprMatrix]:
    return load_qgl_file(prelude_source())


def gate(name: str) -> UnitaryExprMatrix:
    """Look up a standard gate by name."""
    try:
        return standard_gates()[name]
    except KeyError:
        raise KeyError(f"unknown gate {name!r}; known: {sorted(standard_gates())}") from None


def load_library(extra_sources: list[str] = ()) -> dict[str, UnitaryExprMatrix]:
    """Standard gates plus definitions from extra QGL sources (later wins)."""
    lib = dict(standard_gates())
    for src in extra_sources:
        lib.update(load_qgl_file(src))
    return lib
