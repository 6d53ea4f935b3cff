"""Finite field towers F_p < F_q < F_{q^d} with deterministic moduli.

F_{p^k} is realised as F_p[X]/(f) with f monic irreducible of degree k.
When no modulus is supplied, f is the first irreducible in lexicographic
order of the coefficient vector (c_0, ..., c_{k-1}); elements are
coordinate tuples (c_0, ..., c_{k-1}) on the power basis of the class of
X, enumerated and compared in the same lexicographic order.  Every choice
is canonical so that independent runs build identical towers and cache
keys never alias.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from .cyclo import is_prime, check_odd_prime
from .errors import ResourceError, UsageError

MAX_POINT_DEGREE = 4
MAX_FIELD_SIZE = 1 << 21


# ---------------------------------------------------------------------------
# polynomials over F_p: tuples of coefficients, lowest degree first


def _pnorm(f):
    i = len(f)
    while i > 0 and f[i - 1] == 0:
        i -= 1
    return tuple(f[:i])


def _pmul(f, g, p):
    if not f or not g:
        return ()
    out = [0] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if a:
            for j, b in enumerate(g):
                out[i + j] = (out[i + j] + a * b) % p
    return _pnorm(out)


def _pmod(f, g, p):
    f = list(f)
    dg = len(g) - 1
    inv_lead = pow(g[-1], p - 2, p)
    while len(f) - 1 >= dg and f:
        c = f[-1] * inv_lead % p
        shift = len(f) - 1 - dg
        if c:
            for i, b in enumerate(g):
                f[shift + i] = (f[shift + i] - c * b) % p
        f.pop()
        while f and f[-1] == 0:
            f.pop()
    return tuple(f)


def _pgcd(f, g, p):
    while g:
        f, g = g, _pmod(f, g, p)
    return f


def _ppow_x(e, g, p):
    """X^e mod g by square and multiply."""
    base = _pmod((0, 1), g, p)
    result = _pmod((1,), g, p)
    while e:
        if e & 1:
            result = _pmod(_pmul(result, base, p), g, p)
        base = _pmod(_pmul(base, base, p), g, p)
        e >>= 1
    return result


def _minus_x(poly, p):
    out = list(poly) + [0] * (2 - len(poly))
    out[1] = (out[1] - 1) % p
    return _pnorm(out)


def is_irreducible(f, p) -> bool:
    """Rabin test: f | X^(p^k) - X and gcd(X^(p^(k/r)) - X, f) = 1."""
    f = _pnorm(f)
    k = len(f) - 1
    if k < 1:
        return False
    if k == 1:
        return True
    if _minus_x(_ppow_x(p**k, f, p), p):
        return False
    for r in _prime_factors(k):
        g = _pgcd(f, _minus_x(_ppow_x(p ** (k // r), f, p), p), p)
        if len(g) != 1:
            return False
    return True


def _prime_factors(n):
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def mobius(n: int) -> int:
    mu = 1
    d = 2
    while d * d <= n:
        if n % d == 0:
            n //= d
            if n % d == 0:
                return 0
            mu = -mu
        d += 1
    if n > 1:
        mu = -mu
    return mu


@lru_cache(maxsize=None)
def canonical_modulus(p: int, k: int):
    """First monic irreducible of degree k in lex coefficient order."""
    for tail in itertools.product(range(p), repeat=k):
        f = tail + (1,)
        if k >= 2:
            if f[0] == 0:
                continue  # root at 0
            if sum(f) % p == 0:
                continue  # root at 1
        if is_irreducible(f, p):
            return f
    raise AssertionError("no irreducible polynomial found")  # unreachable


# ---------------------------------------------------------------------------


class Field:
    """F_{p^k} with arithmetic on coordinate tuples over F_p."""

    __slots__ = ("p", "k", "modulus", "_trace_vec", "_generator")

    def __init__(self, p: int, k: int, modulus=None):
        check_odd_prime(p)
        if k < 1:
            raise UsageError(f"extension degree must be >= 1, got {k}")
        if p**k > MAX_FIELD_SIZE:
            raise ResourceError(f"field size {p}^{k} exceeds the configured cap")
        if modulus is None:
            modulus = canonical_modulus(p, k)
        else:
            modulus = _pnorm(tuple(c % p for c in modulus))
            if len(modulus) - 1 != k or modulus[-1] != 1:
                raise UsageError(f"modulus must be monic of degree {k}")
            if not is_irreducible(modulus, p):
                raise UsageError("modulus is reducible")
        self.p = p
        self.k = k
        self.modulus = modulus
        self._trace_vec = None
        self._generator = None

    @property
    def size(self) -> int:
        return self.p**self.k

    @property
    def zero(self):
        return (0,) * self.k

    @property
    def one(self):
        return (1,) + (0,) * (self.k - 1)

    def __eq__(self, other):
        return (
            isinstance(other, Field)
            and (self.p, self.k, self.modulus) == (other.p, other.k, other.modulus)
        )

    def __hash__(self):
        return hash((self.p, self.k, self.modulus))

    def __repr__(self):
        return f"Field({self.p}^{self.k})"

    # -- element plumbing ---------------------------------------------------

    def element(self, coords):
        coords = tuple(c % self.p for c in coords)
        if len(coords) != self.k:
            raise ValueError(f"expected {self.k} coordinates")
        return coords

    def from_int(self, v: int):
        """Inverse of to_int; big-endian base-p digits so int order is lex order."""
        if not 0 <= v < self.size:
            raise ValueError("element index out of range")
        digits = []
        for _ in range(self.k):
            digits.append(v % self.p)
            v //= self.p
        return tuple(reversed(digits))

    def to_int(self, x) -> int:
        v = 0
        for c in x:
            v = v * self.p + c
        return v

    def elements(self):
        return itertools.product(range(self.p), repeat=self.k)

    # -- arithmetic ----------------------------------------------------------

    def add(self, x, y):
        p = self.p
        return tuple((a + b) % p for a, b in zip(x, y))

    def sub(self, x, y):
        p = self.p
        return tuple((a - b) % p for a, b in zip(x, y))

    def scalar_mul(self, c, x):
        p = self.p
        return tuple((c * a) % p for a in x)

    def mul(self, x, y):
        p, k = self.p, self.k
        prod = [0] * (2 * k - 1)
        for i, a in enumerate(x):
            if a:
                for j, b in enumerate(y):
                    prod[i + j] += a * b
        red = _pmod(tuple(c % p for c in prod), self.modulus, p)
        return red + (0,) * (k - len(red))

    def pow(self, x, e: int):
        if e < 0:
            return self.pow(self.inv(x), -e)
        result = self.one
        base = x
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    def inv(self, x):
        if not any(x):
            raise ZeroDivisionError("zero is not invertible")
        return self.pow(x, self.size - 2)

    def frobenius(self, x, times: int = 1):
        """x -> x^(p^times)."""
        return self.pow(x, self.p**times)

    # -- traces ---------------------------------------------------------------

    def _trace_vector(self):
        if self._trace_vec is None:
            sums = [self.zero] * self.k
            red = _pmod((0, 1), self.modulus, self.p)
            beta = red + (0,) * (self.k - len(red))
            for _ in range(self.k):
                pw = self.one
                for i in range(self.k):
                    sums[i] = self.add(sums[i], pw)
                    pw = self.mul(pw, beta)
                beta = self.frobenius(beta)
            for s in sums:
                if any(s[1:]):
                    raise AssertionError("trace image escaped the prime field")
            self._trace_vec = tuple(s[0] for s in sums)
        return self._trace_vec

    def trace_abs(self, x) -> int:
        """Absolute trace to F_p, as an integer in [0, p)."""
        tv = self._trace_vector()
        return sum(c * t for c, t in zip(x, tv)) % self.p

    # -- multiplicative structure ----------------------------------------------

    def generator(self):
        """Smallest multiplicative generator in element order."""
        if self._generator is None:
            order = self.size - 1
            primes = _prime_factors(order)
            for v in range(2, self.size):
                g = self.from_int(v)
                if all(self.pow(g, order // r) != self.one for r in primes):
                    self._generator = g
                    break
            else:
                raise AssertionError("no generator found")
        return self._generator


@lru_cache(maxsize=None)
def make_field(p: int, a: int, modulus=None) -> Field:
    """Shared Field instances; modulus as a tuple when supplied."""
    return Field(p, a, modulus)


class Embedding:
    """Ring embedding of F_{p^f} into F_{p^k}, f | k, fixing F_p.

    The source generator is sent to the lexicographically first root of
    the source modulus inside the target's unique subfield of size p^f.
    """

    __slots__ = ("src", "dst", "root", "_img_pows")

    def __init__(self, src: Field, dst: Field):
        if src.p != dst.p or dst.k % src.k != 0:
            raise UsageError(f"{src!r} does not embed into {dst!r}")
        self.src = src
        self.dst = dst
        self.root = self._find_root()
        pows = [dst.one]
        for _ in range(src.k - 1):
            pows.append(dst.mul(pows[-1], self.root))
        self._img_pows = pows

    def _find_root(self):
        src, dst = self.src, self.dst
        if src.k == dst.k and src.modulus == dst.modulus:
            red = _pmod((0, 1), dst.modulus, dst.p)
            return red + (0,) * (dst.k - len(red))
        for x in _subfield_elements(dst, src.k):
            acc = dst.zero
            for c in reversed(src.modulus):
                acc = dst.mul(acc, x)
                if c:
                    acc = dst.add(acc, dst.scalar_mul(c, dst.one))
            if acc == dst.zero:
                return x
        raise AssertionError("modulus has no root in the target subfield")

    def apply(self, x):
        out = self.dst.zero
        for c, pw in zip(x, self._img_pows):
            if c:
                out = self.dst.add(out, self.dst.scalar_mul(c, pw))
        return out

    def project(self, y):
        """Inverse image of y, or ValueError when y is outside the subfield."""
        cols = [pw for pw in self._img_pows]
        sol = _solve_mod_p(cols, y, self.dst.p)
        if sol is None:
            raise ValueError("element is not in the embedded subfield")
        return tuple(sol)


def _subfield_elements(field: Field, f: int):
    """Elements of the unique subfield of size p^f, in lex order."""
    p, k = field.p, field.k
    # matrix of Frobenius^f minus identity; kernel is the subfield
    cols = []
    for i in range(k):
        e = tuple(1 if j == i else 0 for j in range(k))
        img = field.frobenius(e, f)
        cols.append(tuple((a - b) % p for a, b in zip(img, e)))
    basis = _kernel_mod_p(cols, p)
    if len(basis) != f:
        raise AssertionError("subfield dimension mismatch")
    members = set()
    for combo in itertools.product(range(p), repeat=f):
        acc = (0,) * k
        for c, vec in zip(combo, basis):
            if c:
                acc = tuple((a + c * b) % p for a, b in zip(acc, vec))
        members.add(acc)
    return sorted(members)


def _kernel_mod_p(cols, p):
    """Kernel basis of the matrix with the given columns, over F_p."""
    k = len(cols)
    rows = [[cols[j][i] for j in range(k)] for i in range(len(cols[0]))]
    pivots = {}
    r = 0
    for c in range(k):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] % p), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = pow(rows[r][c], p - 2, p)
        rows[r] = [v * inv % p for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] % p:
                f = rows[i][c]
                rows[i] = [(a - f * b) % p for a, b in zip(rows[i], rows[r])]
        pivots[c] = r
        r += 1
    basis = []
    for c in range(k):
        if c in pivots:
            continue
        vec = [0] * k
        vec[c] = 1
        for pc, pr in pivots.items():
            vec[pc] = (-rows[pr][c]) % p
        basis.append(tuple(vec))
    return basis


def _solve_mod_p(cols, target, p):
    """One solution x of cols . x = target over F_p, or None."""
    m = len(cols[0])
    n = len(cols)
    rows = [[cols[j][i] for j in range(n)] + [target[i]] for i in range(m)]
    r = 0
    pivots = []
    for c in range(n):
        piv = next((i for i in range(r, m) if rows[i][c] % p), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = pow(rows[r][c], p - 2, p)
        rows[r] = [v * inv % p for v in rows[r]]
        for i in range(m):
            if i != r and rows[i][c] % p:
                f = rows[i][c]
                rows[i] = [(a - f * b) % p for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    for i in range(r, m):
        if rows[i][n] % p:
            return None
    sol = [0] * n
    for idx, c in enumerate(pivots):
        sol[c] = rows[idx][n] % p
    return sol


@lru_cache(maxsize=None)
def get_embedding(src: Field, dst: Field) -> Embedding:
    return Embedding(src, dst)


def extend(base: Field, d: int) -> Embedding:
    """F_{q^d} over base F_q, as an absolute field plus the embedding."""
    if d < 1:
        raise UsageError("extension degree must be >= 1")
    dst = make_field(base.p, base.k * d) if d > 1 else base
    return get_embedding(base, dst)


def trace_to(emb: Embedding, x):
    """Tr from emb.dst down to emb.src, returned in source coordinates."""
    dst = emb.dst
    r = dst.k // emb.src.k
    q_sub = emb.src.size
    acc = x
    s = x
    for _ in range(r - 1):
        acc = dst.pow(acc, q_sub)
        s = dst.add(s, acc)
    return emb.project(s)


# ---------------------------------------------------------------------------
# closed points of the torus


@dataclass(frozen=True)
class ClosedPoint:
    """Canonical representative of a Frobenius orbit of exact degree d."""

    base: Field
    field: Field
    rep: tuple
    degree: int

    @property
    def rep_int(self) -> int:
        return self.field.to_int(self.rep)

    def sort_key(self):
        return (self.degree, self.rep)


def degree_count(q: int, d: int) -> int:
    """Number of closed points of exact degree d on the torus over F_q."""
    total = sum(mobius(d // e) * (q**e - 1) for e in range(1, d + 1) if d % e == 0)
    if total % d:
        raise AssertionError("Moebius count is not divisible by the degree")
    return total // d


def closed_points(base: Field, d: int, max_degree: int = MAX_POINT_DEGREE):
    """All degree-d closed points, canonical reps in lex order.

    The representative is the lex-least element of its orbit; ascending
    enumeration meets each orbit at its representative first.
    """
    if d < 1:
        raise UsageError("degree must be >= 1")
    if d > max_degree:
        raise ResourceError(f"point degree {d} exceeds the configured cap {max_degree}")
    big = make_field(base.p, base.k * d) if d > 1 else base
    q = base.size
    seen = bytearray(big.size)
    points = []
    for v in range(1, big.size):
        if seen[v]:
            continue
        x = big.from_int(v)
        orbit = [v]
        y = big.pow(x, q)
        while y != x:
            orbit.append(big.to_int(y))
            y = big.pow(y, q)
        for w in orbit:
            seen[w] = 1
        if len(orbit) == d:
            points.append(ClosedPoint(base=base, field=big, rep=x, degree=d))
    if len(points) != degree_count(q, d):
        raise AssertionError("orbit enumeration disagrees with the Moebius count")
    return points


def points_up_to(base: Field, D: int, max_degree: int | None = None):
    """Closed points of every degree 1..D, in canonical order."""
    cap = max_degree if max_degree is not None else max(D, MAX_POINT_DEGREE)
    out = []
    for d in range(1, D + 1):
        out.extend(closed_points(base, d, max_degree=cap))
    return out


def orbit_rep(base: Field, field: Field, x) -> ClosedPoint:
    """Canonicalize a nonzero element whose orbit spans the whole field."""
    if not any(x):
        raise ValueError("zero has no closed point")
    q = base.size
    d = field.k // base.k
    orbit = [x]
    y = field.pow(x, q)
    while y != x:
        orbit.append(y)
        y = field.pow(y, q)
    if len(orbit) != d:
        raise ValueError("element generates a proper subfield")
    return ClosedPoint(base=base, field=field, rep=min(orbit), degree=d)
