"""Exact arithmetic in Z[zeta] for zeta a primitive p-th root of unity.

Elements carry integer coordinates on the power basis {1, zeta, ...,
zeta^(p-2)}; higher powers fold back through zeta^(p-1) = -(1 + zeta +
... + zeta^(p-2)).  The prime p is totally ramified: (p) = (pi)^(p-1)
with pi = 1 - zeta, so valuations are tracked in pi-units and ord_p(x)
equals pi_val(x)/(p-1).  Coordinates are unbounded Python integers;
coefficient growth in characteristic polynomials of symmetric powers is
unbounded, so nothing here may overflow.
"""

from __future__ import annotations

from .errors import UsageError


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def check_odd_prime(p: int) -> None:
    """Reject p = 2 and composites; the verified statements assume p odd."""
    if not is_prime(p) or p == 2:
        raise UsageError(f"level must be an odd prime, got {p}")


class CycInt:
    """An element of Z[zeta_p], immutable by convention."""

    __slots__ = ("p", "coords")

    def __init__(self, p: int, coords):
        check_odd_prime(p)
        coords = tuple(int(c) for c in coords)
        if len(coords) != p - 1:
            raise ValueError(f"expected {p - 1} coordinates, got {len(coords)}")
        self.p = p
        self.coords = coords

    @classmethod
    def from_int(cls, p: int, n: int) -> "CycInt":
        return cls(p, (n,) + (0,) * (p - 2))

    @classmethod
    def zero(cls, p: int) -> "CycInt":
        return cls.from_int(p, 0)

    @classmethod
    def one(cls, p: int) -> "CycInt":
        return cls.from_int(p, 1)

    @classmethod
    def zeta(cls, p: int, k: int = 1) -> "CycInt":
        return cls.from_powers(p, {k: 1})

    @classmethod
    def from_powers(cls, p: int, powers: dict) -> "CycInt":
        """Build sum c_e * zeta^e from an exponent -> coefficient map."""
        check_odd_prime(p)
        bucket = [0] * p
        for e, c in powers.items():
            bucket[e % p] += c
        top = bucket[p - 1]
        return cls(p, tuple(bucket[i] - top for i in range(p - 1)))

    def _check_level(self, other: "CycInt") -> None:
        if self.p != other.p:
            raise ValueError(f"mixed cyclotomic levels {self.p} and {other.p}")

    def __add__(self, other):
        if not isinstance(other, CycInt):
            return NotImplemented
        self._check_level(other)
        return CycInt(self.p, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other):
        if not isinstance(other, CycInt):
            return NotImplemented
        self._check_level(other)
        return CycInt(self.p, tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self):
        return CycInt(self.p, tuple(-a for a in self.coords))

    def __mul__(self, other):
        if isinstance(other, int):
            return CycInt(self.p, tuple(a * other for a in self.coords))
        if not isinstance(other, CycInt):
            return NotImplemented
        self._check_level(other)
        p = self.p
        bucket = [0] * p
        for i, a in enumerate(self.coords):
            if a:
                for j, b in enumerate(other.coords):
                    if b:
                        bucket[(i + j) % p] += a * b
        top = bucket[p - 1]
        return CycInt(p, tuple(bucket[i] - top for i in range(p - 1)))

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            raise ValueError("negative powers are not defined in the integer ring")
        result = CycInt.one(self.p)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def __eq__(self, other):
        return (
            isinstance(other, CycInt)
            and self.p == other.p
            and self.coords == other.coords
        )

    def __hash__(self):
        return hash((self.p, self.coords))

    def __bool__(self):
        return any(self.coords)

    def __repr__(self):
        return f"CycInt({self.p}, {self.coords})"

    def galois(self, c: int) -> "CycInt":
        """Apply the substitution zeta -> zeta^c, c not divisible by p."""
        if c % self.p == 0:
            raise ValueError("substitution exponent must be a unit mod p")
        return CycInt.from_powers(
            self.p, {(i * c): a for i, a in enumerate(self.coords)}
        )

    def div_one_minus_zeta(self):
        """Exact quotient by 1 - zeta, or None when not divisible.

        x is divisible by pi iff p divides the coordinate sum, because
        reduction mod pi sends zeta to 1.  The quotient is recovered
        coordinate by coordinate from the linear system of x = (1-zeta)y.
        """
        p = self.p
        s = sum(self.coords)
        if s % p:
            return None
        top = s // p
        ys = [0] * (p - 1)
        ys[p - 2] = top
        for i in range(p - 2, 0, -1):
            ys[i - 1] = ys[i] + top - self.coords[i]
        if self.coords[0] != ys[0] + top:
            raise AssertionError("inconsistent quotient by 1 - zeta")
        return CycInt(p, ys)

    def pi_val(self):
        """Exact (1-zeta)-adic valuation; None encodes infinity (x = 0)."""
        if not self:
            return None
        v = 0
        x = self
        while True:
            y = x.div_one_minus_zeta()
            if y is None:
                return v
            v += 1
            x = y

    def divide_exact_int(self, m: int) -> "CycInt":
        """Divide by a nonzero rational integer, requiring exactness."""
        if m == 0:
            raise ZeroDivisionError("division by zero")
        if any(c % m for c in self.coords):
            raise ValueError(f"{self!r} is not divisible by {m}")
        return CycInt(self.p, tuple(c // m for c in self.coords))

    def as_integer(self) -> int:
        """Coerce to a rational integer; error on nonzero zeta-components."""
        if any(self.coords[1:]):
            raise ValueError(f"not a rational integer: {self!r}")
        return self.coords[0]

    def serialize(self) -> str:
        return "%d:[%s]" % (self.p, ",".join(str(c) for c in self.coords))

    @classmethod
    def deserialize(cls, text: str) -> "CycInt":
        head, _, body = text.partition(":")
        if not head.isdigit() or not (body.startswith("[") and body.endswith("]")):
            raise ValueError(f"malformed cyclotomic value: {text!r}")
        p = int(head)
        inner = body[1:-1]
        parts = inner.split(",") if inner else []
        try:
            coords = [int(s) for s in parts]
        except ValueError:
            raise ValueError(f"malformed cyclotomic value: {text!r}") from None
        return cls(p, coords)
