"""Unitary expression matrices and their symbolic algebra."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import expr as E
from .complex import C0, C1, ComplexExpr
from .diff import diff
from .expr import Expr
from .numeric import DomainError, eval_scalars

__all__ = [
    "UnitaryExprMatrix",
    "identity",
    "matmul_sym",
    "kron_sym",
    "substitute",
    "rename_params",
    "dagger",
    "transpose",
    "embed",
    "differentiate",
    "eval_numeric",
    "scale",
]


@dataclass(frozen=True, eq=True)
class UnitaryExprMatrix:
    """A square grid of complex expressions over an ordered parameter list.

    Equality and hashing are structural (elements are interned expressions),
    which is what "expression identity" means throughout the package. The
    ``name`` is a label only and does not take part in equality.
    """

    radices: tuple[int, ...]
    params: tuple[str, ...]
    elements: tuple[tuple[ComplexExpr, ...], ...]
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        dim = self.dim
        if len(self.elements) != dim or any(len(row) != dim for row in self.elements):
            raise ValueError(f"element grid is not {dim}x{dim} for radices {self.radices}")
        if any(r < 2 for r in self.radices):
            raise ValueError(f"radices must be >= 2, got {self.radices}")

    @property
    def dim(self) -> int:
        return math.prod(self.radices)

    @property
    def num_params(self) -> int:
        return len(self.params)

    @property
    def num_qudits(self) -> int:
        return len(self.radices)

    def __getitem__(self, ij: tuple[int, int]) -> ComplexExpr:
        i, j = ij
        return self.elements[i][j]

    def free_vars(self) -> list[str]:
        return E.free_vars(*self.roots())

    def roots(self) -> list[Expr]:
        """All real components, row-major, re before im."""
        out = []
        for row in self.elements:
            for c in row:
                out.append(c.re)
                out.append(c.im)
        return out

    def is_constant(self) -> bool:
        return not self.params

    def with_name(self, name: str | None) -> "UnitaryExprMatrix":
        return UnitaryExprMatrix(self.radices, self.params, self.elements, name)

    def __matmul__(self, other: "UnitaryExprMatrix") -> "UnitaryExprMatrix":
        return matmul_sym(self, other)

    def __call__(self, *params: float) -> np.ndarray:
        return eval_numeric(self, params)

    def __repr__(self) -> str:
        label = self.name or "utry"
        return f"<UnitaryExprMatrix {label} radices={self.radices} params={self.params}>"


def _merge_params(a: Sequence[str], b: Sequence[str]) -> tuple[str, ...]:
    out = list(a)
    seen = set(a)
    for p in b:
        if p not in seen:
            out.append(p)
            seen.add(p)
    return tuple(out)


def _from_grid(radices, params, grid, name=None) -> UnitaryExprMatrix:
    return UnitaryExprMatrix(tuple(radices), tuple(params), tuple(tuple(r) for r in grid), name)


def identity(radices: Sequence[int]) -> UnitaryExprMatrix:
    d = math.prod(radices)
    grid = [[C1 if i == j else C0 for j in range(d)] for i in range(d)]
    return _from_grid(radices, (), grid, "I")


def matmul_sym(a: UnitaryExprMatrix, b: UnitaryExprMatrix) -> UnitaryExprMatrix:
    if a.dim != b.dim or a.radices != b.radices:
        raise ValueError(f"dimension mismatch: {a.radices} vs {b.radices}")
    d = a.dim
    grid = []
    for i in range(d):
        row = []
        for j in range(d):
            acc = C0
            for k in range(d):
                x, y = a.elements[i][k], b.elements[k][j]
                if x.is_zero or y.is_zero:
                    continue
                acc = acc + x * y
            row.append(acc)
        grid.append(row)
    return _from_grid(a.radices, _merge_params(a.params, b.params), grid)


def kron_sym(a: UnitaryExprMatrix, b: UnitaryExprMatrix) -> UnitaryExprMatrix:
    da, db = a.dim, b.dim
    grid = [[C0] * (da * db) for _ in range(da * db)]
    for i in range(da):
        for j in range(da):
            x = a.elements[i][j]
            if x.is_zero:
                continue
            for k in range(db):
                for l in range(db):
                    y = b.elements[k][l]
                    if not y.is_zero:
                        grid[i * db + k][j * db + l] = x * y
    return _from_grid(a.radices + b.radices, _merge_params(a.params, b.params), grid)


def _map_elements(u: UnitaryExprMatrix, fn) -> list[list[ComplexExpr]]:
    return [[fn(c) for c in row] for row in u.elements]


def substitute(u: UnitaryExprMatrix, mapping: Mapping[str, Expr]) -> UnitaryExprMatrix:
    """Replace parameters by expressions; the new parameter list is the free
    variables of the result in first-appearance order (old order first)."""
    unknown = set(mapping) - set(u.params)
    if unknown:
        raise KeyError(f"unknown variable(s) in substitution: {sorted(unknown)}")
    memo: dict = {}
    grid = _map_elements(
        u,
        lambda c: ComplexExpr(E.substitute_expr(c.re, mapping, memo), E.substitute_expr(c.im, mapping, memo)),
    )
    candidates: list[str] = []
    for p in u.params:
        if p in mapping:
            candidates.extend(E.free_vars(mapping[p]))
        else:
            candidates.append(p)
    present = set(E.free_vars(*[x for row in grid for c in row for x in (c.re, c.im)]))
    params = [p for p in dict.fromkeys(candidates) if p in present]
    return _from_grid(u.radices, params, grid, u.name)


def rename_params(u: UnitaryExprMatrix, names: Sequence[str]) -> UnitaryExprMatrix:
    """Positionally rename the parameters of ``u`` to ``names``."""
    if len(names) != len(u.params):
        raise ValueError(f"expected {len(u.params)} names, got {len(names)}")
    if tuple(names) == u.params:
        return u
    mapping = {old: E.var(new) for old, new in zip(u.params, names)}
    memo: dict = {}
    grid = _map_elements(
        u,
        lambda c: ComplexExpr(E.substitute_expr(c.re, mapping, memo), E.substitute_expr(c.im, mapping, memo)),
    )
    return _from_grid(u.radices, names, grid, u.name)


def dagger(u: UnitaryExprMatrix) -> UnitaryExprMatrix:
    d = u.dim
    grid = [[u.elements[j][i].conj() for j in range(d)] for i in range(d)]
    return _from_grid(u.radices, u.params, grid)


def transpose(u: UnitaryExprMatrix) -> UnitaryExprMatrix:
    d = u.dim
    grid = [[u.elements[j][i] for j in range(d)] for i in range(d)]
    return _from_grid(u.radices, u.params, grid)


def scale(u: UnitaryExprMatrix, c: ComplexExpr) -> UnitaryExprMatrix:
    """Multiply every element by the complex scalar ``c``."""
    params = _merge_params(u.params, c.free_vars())
    return _from_grid(u.radices, params, _map_elements(u, lambda x: c * x))


def _digits(index: int, radices: Sequence[int]) -> list[int]:
    out = []
    for r in reversed(radices):
        out.append(index % r)
        index //= r
    return out[::-1]


def _undigits(digits: Sequence[int], radices: Sequence[int]) -> int:
    idx = 0
    for dgt, r in zip(digits, radices):
        idx = idx * r + dgt
    return idx


def embed(u: UnitaryExprMatrix, target_radices: Sequence[int], positions: Sequence[int]) -> UnitaryExprMatrix:
    """Lift ``u`` to the full system: u acts on ``positions`` (in u's qudit
    order), identity elsewhere. Qudit 0 is the most significant digit."""
    target_radices = tuple(target_radices)
    positions = tuple(positions)
    n = len(target_radices)
    if len(set(positions)) != len(positions):
        raise ValueError(f"duplicate position in {positions}")
    if len(positions) != len(u.radices):
        raise ValueError(f"{len(u.radices)}-qudit expression placed on {len(positions)} positions")
    for p, r in zip(positions, u.radices):
        if not 0 <= p < n:
            raise ValueError(f"position {p} out of range for {n} qudits")
        if target_radices[p] != r:
            raise ValueError(f"radix mismatch at position {p}: {target_radices[p]} != {r}")
    D = math.prod(target_radices)
    grid = [[C0] * D for _ in range(D)]
    for row in range(D):
        rd = _digits(row, target_radices)
        ri = _undigits([rd[p] for p in positions], u.radices)
        for li in range(u.dim):
            c = u.elements[ri][li]
            if c.is_zero:
                continue
            cd = list(rd)
            for p, dgt in zip(positions, _digits(li, u.radices)):
                cd[p] = dgt
            grid[row][_undigits(cd, target_radices)] = c
    return _from_grid(target_radices, u.params, grid)


def differentiate(u: UnitaryExprMatrix) -> list[UnitaryExprMatrix]:
    """Element-wise partial derivatives, one matrix per parameter."""
    out = []
    for p in u.params:
        memo: dict = {}
        grid = _map_elements(u, lambda c: ComplexExpr(diff(c.re, p, memo), diff(c.im, p, memo)))
        out.append(_from_grid(u.radices, u.params, grid))
    return out


def eval_numeric(u: UnitaryExprMatrix, p: Sequence[float]) -> np.ndarray:
    """Evaluate ``u`` at parameter vector ``p`` with 64-bit floats."""
    if len(p) != len(u.params):
        raise ValueError(f"expected {len(u.params)} parameters, got {len(p)}")
    env = dict(zip(u.params, (float(x) for x in p)))
    roots = u.roots()
    try:
        vals = eval_scalars(roots, env)
    except DomainError:
        # locate the failing element for the error message
        d = u.dim
        for i in range(d):
            for j in range(d):
                c = u.elements[i][j]
                try:
                    eval_scalars([c.re, c.im], env)
                except DomainError as err:
                    raise DomainError(str(err).split(" at element")[0], (i, j)) from None
        raise
    arr = np.array(vals, dtype=np.float64).view(np.complex128)
    return arr.reshape(u.dim, u.dim)
