"""Truncated power series with exact coefficients."""
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Tuple, Union

Exact = Union[int, Fraction]


def _normal(value: Exact) -> Exact:
    if isinstance(value, Fraction) and value.denominator == 1:
        return value.numerator
    return value


@dataclass(frozen=True)
class SeriesTrunc:
    """a_0 + a_1 z + ... + a_N z^N + O(z^{N+1}).

    Every operation truncates at the smallest order its operands determine, so no coefficient of
    a result is ever wrong; it is only ever missing.
    """

    coeffs: Tuple[Exact, ...]

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError("A truncated series needs at least the constant term", self.coeffs)
        object.__setattr__(self, "coeffs", tuple(_normal(c) for c in self.coeffs))

    @staticmethod
    def of(coeffs: Iterable[Exact]) -> "SeriesTrunc":
        return SeriesTrunc(tuple(coeffs))

    @staticmethod
    def constant(value: Exact, order: int) -> "SeriesTrunc":
        return SeriesTrunc((value,) + (0,) * order)

    @staticmethod
    def monomial(power: int, order: int, value: Exact = 1) -> "SeriesTrunc":
        coeffs: List[Exact] = [0] * (order + 1)
        if power <= order:
            coeffs[power] = value
        return SeriesTrunc(tuple(coeffs))

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, power: int) -> Exact:
        if power > self.order:
            raise IndexError("Coefficient beyond the truncation order", power)
        return self.coeffs[power] if power >= 0 else 0

    def __len__(self) -> int:
        return len(self.coeffs)

    def truncate(self, order: int) -> "SeriesTrunc":
        if order > self.order:
            raise ValueError("Cannot extend a truncated series", order)
        return SeriesTrunc(self.coeffs[: order + 1])

    def _coerce(self, other) -> "SeriesTrunc":
        if isinstance(other, SeriesTrunc):
            return other
        return SeriesTrunc.constant(other, self.order)

    def __add__(self, other) -> "SeriesTrunc":
        other = self._coerce(other)
        order = min(self.order, other.order)
        return SeriesTrunc(tuple(self.coeffs[k] + other.coeffs[k] for k in range(order + 1)))

    __radd__ = __add__

    def __neg__(self) -> "SeriesTrunc":
        return SeriesTrunc(tuple(-c for c in self.coeffs))

    def __sub__(self, other) -> "SeriesTrunc":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "SeriesTrunc":
        return self._coerce(other) - self

    def __mul__(self, other) -> "SeriesTrunc":
        if not isinstance(other, SeriesTrunc):
            return SeriesTrunc(tuple(c * other for c in self.coeffs))
        order = min(self.order, other.order)
        a, b = self.coeffs, other.coeffs
        return SeriesTrunc(tuple(sum(a[i] * b[k - i] for i in range(k + 1)) for k in range(order + 1)))

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> "SeriesTrunc":
        if exponent < 0:
            return self.reciprocal() ** (-exponent)
        result = SeriesTrunc.constant(1, self.order)
        for _ in range(exponent):
            result = result * self
        return result

    def shift(self, power: int = 1) -> "SeriesTrunc":
        """z^power times the series; the order grows with it."""
        return SeriesTrunc((0,) * power + self.coeffs)

    def derivative(self) -> "SeriesTrunc":
        if self.order == 0:
            raise ValueError("The derivative of an order-0 truncation is unknown", self.coeffs)
        return SeriesTrunc(tuple(k * self.coeffs[k] for k in range(1, self.order + 1)))

    def reciprocal(self) -> "SeriesTrunc":
        a0 = self.coeffs[0]
        if a0 == 0:
            raise ZeroDivisionError("Series with zero constant term has no reciprocal")
        inverse: List[Exact] = [Fraction(1) / a0]
        for k in range(1, self.order + 1):
            acc = sum(self.coeffs[i] * inverse[k - i] for i in range(1, k + 1))
            inverse.append(-acc / Fraction(a0))
        return SeriesTrunc(tuple(inverse))

    def exp(self) -> "SeriesTrunc":
        """exp(f) for f with f(0) = 0, from k g_k = sum_{j=1..k} j f_j g_{k-j}."""
        if self.coeffs[0] != 0:
            raise ValueError("exp needs a series without constant term", self.coeffs[0])
        g: List[Exact] = [1]
        for k in range(1, self.order + 1):
            acc = sum(j * self.coeffs[j] * g[k - j] for j in range(1, k + 1))
            g.append(Fraction(acc, k) if isinstance(acc, int) else acc / k)
        return SeriesTrunc(tuple(g))

    def scale(self, factor: Exact) -> "SeriesTrunc":
        """f(factor * z)."""
        return SeriesTrunc(tuple(c * factor ** k for k, c in enumerate(self.coeffs)))

    def evaluate(self, z):
        """Partial sum at z; exact for rational z, and mpmath-valued for mpmath z."""
        total = 0
        for c in reversed(self.coeffs):
            total = total * z + c
        return total

    def dominated_by(self, other: "SeriesTrunc") -> List[int]:
        """Orders k where self_k > other_k (empty when self <= other coefficientwise)."""
        order = min(self.order, other.order)
        return [k for k in range(order + 1) if self.coeffs[k] > other.coeffs[k]]

    def __repr__(self) -> str:
        return f"SeriesTrunc({list(self.coeffs)} + O(z^{self.order + 1}))"

