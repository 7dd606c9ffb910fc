"""Finite fields GF(p^m) in a polynomial basis.

Elements are stored canonically: an ``int`` in ``[0, p)`` for prime fields and
a coefficient tuple ``(c0, ..., c_{m-1})`` over GF(p) for extension fields.
Every element also has an integer *index* ``sum(c_i * p**i)`` in ``[0, q)``,
which is what the vectorised kernels and the random sampler work with.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator

import numpy as np

__all__ = [
    "FieldError",
    "NonPrimeCharacteristic",
    "DegreeOutOfRange",
    "OrderTooLarge",
    "FieldMismatch",
    "InverseOfZero",
    "NotAPrimePower",
    "FieldSpec",
    "FieldElement",
    "field_create",
    "parse_field",
    "is_prime",
    "prime_power",
    "add",
    "sub",
    "mul",
    "neg",
    "inv",
    "zero",
    "one",
    "sample_uniform",
    "DEFAULT_MAX_ORDER",
    "TABLE_MAX_ORDER",
]

DEFAULT_MAX_ORDER = 2**20
# Full add/mul tables are built up to this order; above it arithmetic is on the fly.
TABLE_MAX_ORDER = 256


class FieldError(ValueError):
    pass


class NonPrimeCharacteristic(FieldError):
    pass


class DegreeOutOfRange(FieldError):
    pass


class OrderTooLarge(FieldError):
    pass


class FieldMismatch(FieldError):
    pass


class InverseOfZero(ZeroDivisionError):
    pass


class NotAPrimePower(FieldError):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def prime_power(q: int) -> tuple[int, int] | None:
    """Return ``(p, m)`` with ``p**m == q`` and ``p`` prime, or None."""
    if q < 2:
        return None
    p = next(d for d in itertools.count(2) if q % d == 0 or d * d > q)
    if q % p:
        p = q
    m = 0
    rest = q
    while rest % p == 0:
        rest //= p
        m += 1
    return (p, m) if rest == 1 else None


# -- polynomial helpers over GF(p); lists are low-degree-first ------------


def _trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_mod(a: list[int], b: list[int], p: int) -> list[int]:
    a = _trim(list(a))
    db = len(b) - 1
    inv_lead = pow(b[-1], p - 2, p)
    while len(a) - 1 >= db:
        coef = a[-1] * inv_lead % p
        shift = len(a) - 1 - db
        for i, bi in enumerate(b):
            a[shift + i] = (a[shift + i] - coef * bi) % p
        _trim(a)
    return a


def _monic_polys(degree: int, p: int) -> Iterator[list[int]]:
    """Monic polynomials of a degree, lexicographic in (c0, c1, ...)."""
    for low in itertools.product(range(p), repeat=degree):
        yield list(low) + [1]


def _is_irreducible(poly: list[int], p: int) -> bool:
    m = len(poly) - 1
    for d in range(1, m // 2 + 1):
        for divisor in _monic_polys(d, p):
            if not _poly_mod(poly, divisor, p):
                return False
    return True


def _smallest_irreducible(p: int, m: int) -> tuple[int, ...]:
    for poly in _monic_polys(m, p):
        if _is_irreducible(poly, p):
            return tuple(poly)
    raise AssertionError(f"no irreducible polynomial of degree {m} over GF({p})")


@dataclass(frozen=True)
class FieldSpec:
    """The finite field GF(p^m).

    Construct through :func:`field_create`, which validates the parameters and
    picks the canonical modulus.
    """

    characteristic: int
    degree: int
    modulus_polynomial: tuple[int, ...] | None = None
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    @property
    def order(self) -> int:
        return self.characteristic**self.degree

    def __str__(self) -> str:
        return f"gf({self.order})"

    # -- index <-> canonical value ----------------------------------------

    def from_index(self, index: int) -> FieldElement:
        return FieldElement(self._value_of(int(index)), self)

    def _value_of(self, index: int):
        if self.degree == 1:
            return index
        p = self.characteristic
        coeffs = []
        for _ in range(self.degree):
            index, c = divmod(index, p)
            coeffs.append(c)
        return tuple(coeffs)

    def index_of(self, value) -> int:
        if self.degree == 1:
            return int(value)
        return sum(c * self.characteristic**i for i, c in enumerate(value))

    def elements(self) -> list[FieldElement]:
        return [self.from_index(i) for i in range(self.order)]

    def __call__(self, value) -> FieldElement:
        """Coerce an int (prime fields: reduced mod p; extension: an index) or tuple."""
        if isinstance(value, FieldElement):
            if value.field != self:
                raise FieldMismatch(f"{value.field} element used in {self}")
            return value
        if self.degree == 1:
            return FieldElement(int(value) % self.characteristic, self)
        if isinstance(value, int):
            if not 0 <= value < self.order:
                raise ValueError(f"index {value} out of range for {self}")
            return self.from_index(value)
        coeffs = [int(c) % self.characteristic for c in value]
        if len(coeffs) > self.degree:
            raise ValueError(f"too many coefficients for {self}")
        coeffs += [0] * (self.degree - len(coeffs))
        return FieldElement(tuple(coeffs), self)

    # -- index arithmetic ---------------------------------------------------

    def add_idx(self, a: int, b: int) -> int:
        if self.degree == 1:
            return (a + b) % self.characteristic
        if self.has_tables:
            return int(self.tables.add[a, b])
        p = self.characteristic
        out, scale = 0, 1
        for _ in range(self.degree):
            a, ca = divmod(a, p)
            b, cb = divmod(b, p)
            out += ((ca + cb) % p) * scale
            scale *= p
        return out

    def neg_idx(self, a: int) -> int:
        if self.degree == 1:
            return -a % self.characteristic
        p = self.characteristic
        out, scale = 0, 1
        for _ in range(self.degree):
            a, c = divmod(a, p)
            out += (-c % p) * scale
            scale *= p
        return out

    def mul_idx(self, a: int, b: int) -> int:
        if self.degree == 1:
            return a * b % self.characteristic
        if self.has_tables:
            return int(self.tables.mul[a, b])
        return self._poly_mul_idx(a, b)

    def _poly_mul_idx(self, a: int, b: int) -> int:
        p = self.characteristic
        pa = list(self._value_of(a))
        pb = list(self._value_of(b))
        prod = [0] * (2 * self.degree - 1)
        for i, x in enumerate(pa):
            if x:
                for j, y in enumerate(pb):
                    prod[i + j] = (prod[i + j] + x * y) % p
        return self.index_of(_poly_mod(prod, list(self.modulus_polynomial), p))

    def inv_idx(self, a: int) -> int:
        if a == 0:
            raise InverseOfZero(f"zero has no inverse in {self}")
        if self.degree == 1:
            return pow(a, self.characteristic - 2, self.characteristic)
        if self.has_tables:
            return int(self.tables.inv[a])
        # a^(q-2) by square-and-multiply
        result, base, e = 1, a, self.order - 2
        while e:
            if e & 1:
                result = self._poly_mul_idx(result, base)
            base = self._poly_mul_idx(base, base)
            e >>= 1
        return result

    # -- tables ---------------------------------------------------------------

    @property
    def has_tables(self) -> bool:
        return self.order <= TABLE_MAX_ORDER

    @property
    def tables(self) -> FieldTables:
        tabs = self._cache.get("tables")
        if tabs is None:
            tabs = FieldTables.build(self)
            self._cache["tables"] = tabs
        return tabs


@dataclass(frozen=True)
class FieldTables:
    """Dense index tables; ``add[a, b]``, ``mul[a, b]``, ``neg[a]``, ``inv[a]``."""

    add: np.ndarray
    mul: np.ndarray
    neg: np.ndarray
    inv: np.ndarray

    @classmethod
    def build(cls, f: FieldSpec) -> FieldTables:
        q, p = f.order, f.characteristic
        idx = np.arange(q)
        if f.degree == 1:
            add = (idx[:, None] + idx[None, :]) % p
            mul = (idx[:, None] * idx[None, :]) % p
        else:
            digits = np.stack([(idx // p**k) % p for k in range(f.degree)], axis=1)
            weights = p ** np.arange(f.degree)
            add = ((digits[:, None, :] + digits[None, :, :]) % p) @ weights
            mul = np.array([[f._poly_mul_idx(a, b) for b in range(q)] for a in range(q)])
        neg = np.argmin(add, axis=1)  # add[a, neg[a]] == 0 is the unique zero of row a
        inv = np.zeros(q, dtype=np.int32)
        rows, cols = np.nonzero(mul == 1)
        inv[rows] = cols
        return cls(
            add=np.ascontiguousarray(add, dtype=np.int32),
            mul=np.ascontiguousarray(mul, dtype=np.int32),
            neg=np.ascontiguousarray(neg, dtype=np.int32),
            inv=inv,
        )


@dataclass(frozen=True, eq=False)
class FieldElement:
    value: int | tuple[int, ...]
    field: FieldSpec

    @property
    def index(self) -> int:
        return self.field.index_of(self.value)

    def _check(self, other) -> FieldElement:
        if not isinstance(other, FieldElement):
            return self.field(other)
        if other.field != self.field:
            raise FieldMismatch(f"cannot combine {self.field} and {other.field} elements")
        return other

    def __eq__(self, other) -> bool:
        if isinstance(other, FieldElement):
            return self.field == other.field and self.value == other.value
        if isinstance(other, int) and self.field.degree == 1:
            return self.value == other % self.field.characteristic
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.field.characteristic, self.field.degree, self.value))

    def __bool__(self) -> bool:
        return self.index != 0

    def __add__(self, other):
        other = self._check(other)
        return self.field.from_index(self.field.add_idx(self.index, other.index))

    __radd__ = __add__

    def __neg__(self):
        return self.field.from_index(self.field.neg_idx(self.index))

    def __sub__(self, other):
        other = self._check(other)
        return self + (-other)

    def __rsub__(self, other):
        return self._check(other) - self

    def __mul__(self, other):
        other = self._check(other)
        return self.field.from_index(self.field.mul_idx(self.index, other.index))

    __rmul__ = __mul__

    def inverse(self) -> FieldElement:
        return self.field.from_index(self.field.inv_idx(self.index))

    def __truediv__(self, other):
        return self * self._check(other).inverse()

    def __repr__(self) -> str:
        return f"{self.field}({self.value})"


def field_create(p: int, m: int = 1, max_order: int = DEFAULT_MAX_ORDER) -> FieldSpec:
    """Build GF(p^m) with the lexicographically smallest monic irreducible modulus."""
    if not is_prime(p):
        raise NonPrimeCharacteristic(f"characteristic {p} is not prime")
    if m < 1:
        raise DegreeOutOfRange(f"degree must be >= 1, got {m}")
    if p**m > max_order:
        raise OrderTooLarge(f"field order {p}^{m} exceeds maximum {max_order}")
    modulus = _smallest_irreducible(p, m) if m > 1 else None
    return FieldSpec(p, m, modulus)


_FIELD_RE = re.compile(r"^\s*(?:gf|GF)\s*\(\s*(\d+)\s*\)\s*$")


def parse_field_order(text: str) -> int:
    """Parse ``gf(q)`` (or a bare integer) into q, without requiring a prime power."""
    match = _FIELD_RE.match(text)
    if match:
        return int(match.group(1))
    if text.strip().isdigit():
        return int(text)
    raise ValueError(f"cannot parse field {text!r}; expected gf(q)")


def parse_field(text: str, max_order: int = DEFAULT_MAX_ORDER) -> FieldSpec:
    q = parse_field_order(text)
    pm = prime_power(q)
    if pm is None:
        raise NotAPrimePower(f"{q} is not a prime power; no field of that order exists")
    return field_create(*pm, max_order=max_order)


def _same(a: FieldElement, b: FieldElement) -> None:
    if a.field != b.field:
        raise FieldMismatch(f"cannot combine {a.field} and {b.field} elements")


def add(a: FieldElement, b: FieldElement) -> FieldElement:
    _same(a, b)
    return a + b


def sub(a: FieldElement, b: FieldElement) -> FieldElement:
    _same(a, b)
    return a - b


def mul(a: FieldElement, b: FieldElement) -> FieldElement:
    _same(a, b)
    return a * b


def neg(a: FieldElement) -> FieldElement:
    return -a


def inv(a: FieldElement) -> FieldElement:
    return a.inverse()


def zero(f: FieldSpec) -> FieldElement:
    return f.from_index(0)


def one(f: FieldSpec) -> FieldElement:
    return f.from_index(1)


def sample_uniform(f: FieldSpec, rng) -> FieldElement:
    """Draw a uniform element; ``rng`` is a :class:`rlnclab.rng.RandomStream`."""
    return f.from_index(rng.integers(f.order))
