"""Complex expressions as pairs of real scalar expressions."""

from __future__ import annotations

from dataclasses import dataclass

from . import expr as E
from .expr import Expr

__all__ = ["ComplexExpr", "C0", "C1", "CI", "cplx", "UnsupportedComplex"]


class UnsupportedComplex(ValueError):
    """Raised for operations with no closed form over real components."""


@dataclass(frozen=True)
class ComplexExpr:
    re: Expr
    im: Expr

    @property
    def is_real(self) -> bool:
        return self.im.is_zero

    @property
    def is_zero(self) -> bool:
        return self.re.is_zero and self.im.is_zero

    @property
    def is_one(self) -> bool:
        return self.re.is_one and self.im.is_zero

    def __add__(self, o: "ComplexExpr") -> "ComplexExpr":
        return ComplexExpr(E.add(self.re, o.re), E.add(self.im, o.im))

    def __sub__(self, o: "ComplexExpr") -> "ComplexExpr":
        return ComplexExpr(E.sub(self.re, o.re), E.sub(self.im, o.im))

    def __neg__(self) -> "ComplexExpr":
        return ComplexExpr(E.neg(self.re), E.neg(self.im))

    def __mul__(self, o: "ComplexExpr") -> "ComplexExpr":
        a, b, c, d = self.re, self.im, o.re, o.im
        if b.is_zero and d.is_zero:
            return ComplexExpr(E.mul(a, c), E.ZERO)
        return ComplexExpr(
            E.sub(E.mul(a, c), E.mul(b, d)),
            E.add(E.mul(a, d), E.mul(b, c)),
        )

    def __truediv__(self, o: "ComplexExpr") -> "ComplexExpr":
        if o.is_zero:
            raise ZeroDivisionError("complex division by the constant 0")
        if o.im.is_zero:
            return ComplexExpr(E.div(self.re, o.re), E.div(self.im, o.re))
        num = self * o.conj()
        den = E.add(E.mul(o.re, o.re), E.mul(o.im, o.im))
        return ComplexExpr(E.div(num.re, den), E.div(num.im, den))

    def conj(self) -> "ComplexExpr":
        return ComplexExpr(self.re, E.neg(self.im))

    def exp(self) -> "ComplexExpr":
        """e^(re + i im) = e^re (cos im + i sin im)."""
        if self.im.is_zero:
            return ComplexExpr(E.exp(self.re), E.ZERO)
        mag = E.exp(self.re)
        return ComplexExpr(E.mul(mag, E.cos(self.im)), E.mul(mag, E.sin(self.im)))

    def ipow(self, k: int) -> "ComplexExpr":
        """Integer power by repeated squaring."""
        if k < 0:
            return C1 / self.ipow(-k)
        result, base = C1, self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def free_vars(self) -> list[str]:
        return E.free_vars(self.re, self.im)

    def __str__(self) -> str:
        if self.im.is_zero:
            return str(self.re)
        if self.re.is_zero:
            return f"i*({self.im})"
        return f"{self.re} + i*({self.im})"


def cplx(re, im=0) -> ComplexExpr:
    return ComplexExpr(E._lift(re), E._lift(im))


C0 = ComplexExpr(E.ZERO, E.ZERO)
C1 = ComplexExpr(E.ONE, E.ZERO)
CI = ComplexExpr(E.ZERO, E.ONE)
