"""Hyper-Kloosterman sums Kl_n(t, m), exact in Z[zeta_p].

Kl_n(t, m) sums zeta_p^(absolute trace of x_1 + ... + x_n + t/(x_1...x_n))
over n-tuples of nonzero elements of the m-th extension of t's field.  Two
independent routes are implemented: direct enumeration in discrete-log
coordinates (the last variable is closed by an index lookup of t/prod x,
so inner loops touch only small integers), and a full table over one field
built by the convolution recursion g_j(t) = sum_x psi(x) g_{j-1}(t/x).
Values are memoised in an append-only, versioned text cache keyed by every
parameter that pins the tower, so distinct moduli never alias.
"""

from __future__ import annotations

import threading
from functools import lru_cache

import numpy as np

from .cyclo import CycInt
from .errors import CacheError, ResourceError, UsageError
from .ff import ClosedPoint, Field, get_embedding, make_field

DEFAULT_BUDGET = 2_000_000

_mult_lock = threading.Lock()
_mult_cache: dict = {}


class _MultData:
    """Discrete-log tables for one field: generator powers and traces."""

    __slots__ = ("field", "S", "pows", "dlog", "tr", "trD")

    def __init__(self, field: Field):
        g = field.generator()
        S = field.size - 1
        pows = []
        dlog = {}
        tr = np.zeros(S, dtype=np.int64)
        x = field.one
        for i in range(S):
            pows.append(x)
            dlog[x] = i
            tr[i] = field.trace_abs(x)
            x = field.mul(x, g)
        if x != field.one:
            raise AssertionError("generator order mismatch")
        self.field = field
        self.S = S
        self.pows = pows
        self.dlog = dlog
        self.tr = tr
        self.trD = np.concatenate([tr, tr])


def _mult_data(field: Field) -> _MultData:
    with _mult_lock:
        data = _mult_cache.get(field)
        if data is None:
            data = _MultData(field)
            _mult_cache[field] = data
        return data


def _fold_counts(p: int, counts) -> CycInt:
    """Collapse exponent counts to a reduced element of Z[zeta_p]."""
    bucket = [0] * p
    for e, c in enumerate(counts):
        bucket[e % p] += int(c)
    top = bucket[p - 1]
    return CycInt(p, tuple(bucket[i] - top for i in range(p - 1)))


def _direct_sum(n: int, field: Field, t) -> CycInt:
    """Flat enumeration of the n-fold sum at a nonzero element t."""
    p = field.p
    md = _mult_data(field)
    S, tr, trD = md.S, md.tr, md.trD
    it = md.dlog[t]
    if n == 1:
        phases = tr + trD[it + 1 : it + S + 1][::-1]
        counts = np.bincount(phases, minlength=3 * p)
    elif n == 2:
        counts = np.zeros(3 * p, dtype=np.int64)
        for j1 in range(S):
            b = (it - j1) % S + S
            phases = int(tr[j1]) + tr + trD[b - S + 1 : b + 1][::-1]
            counts += np.bincount(phases, minlength=3 * p)
    else:
        import itertools

        counts = np.zeros((n + 1) * p, dtype=np.int64)
        for prefix in itertools.product(range(S), repeat=n - 1):
            c = int(sum(int(tr[j]) for j in prefix))
            b = (it - sum(prefix)) % S + S
            phases = c + tr + trD[b - S + 1 : b + 1][::-1]
            counts += np.bincount(phases, minlength=(n + 1) * p)
    return _fold_counts(p, counts)


def kloosterman_table(n: int, field: Field, budget: int = DEFAULT_BUDGET):
    """Kl_n(t) for every t in field^*, by the convolution recursion.

    Returns a dict from element coordinates to CycInt.  O(n |F|^2)
    character operations, independent of the direct route.
    """
    if n < 1:
        raise UsageError("dimension must be >= 1")
    S = field.size - 1
    if n * S * S > 4 * budget:
        raise ResourceError(f"table work n*|F|^2 = {n * S * S} exceeds budget")
    p = field.p
    md = _mult_data(field)
    tr = md.tr
    G = np.zeros((S, p), dtype=np.int64)
    G[np.arange(S), tr % p] = 1
    perms = [np.array([(c + t) % p for c in range(p)]) for t in range(p)]
    for _ in range(n):
        H = np.zeros_like(G)
        for u in range(S):
            H[:, perms[int(tr[u]) % p]] += np.roll(G, u, axis=0)
        G = H
    out = {}
    for i in range(S):
        out[md.pows[i]] = _fold_counts(p, G[i])
    return out


# ---------------------------------------------------------------------------
# persistent cache

CACHE_HEADER = "# klsym sum cache v1"


def _fmt_ints(values) -> str:
    return "[%s]" % ",".join(str(v) for v in values)


def _parse_ints(text: str):
    if not (text.startswith("[") and text.endswith("]")):
        raise ValueError(f"malformed integer list: {text!r}")
    inner = text[1:-1]
    return tuple(int(s) for s in inner.split(",")) if inner else ()


def record_key(p: int, a: int, modulus, n: int, d: int, rep, m: int) -> str:
    return "%d,%d,%s|%d|%d|%s|%d" % (p, a, _fmt_ints(modulus), n, d, _fmt_ints(rep), m)


def parse_record(line: str):
    """Split a cache line into (key, value); raise CacheError when invalid."""
    parts = line.split("|")
    if len(parts) != 7 or parts[0] != "v1":
        raise CacheError(f"unrecognised record shape: {line!r}")
    try:
        head = parts[1].split(",", 2)
        if len(head) != 3:
            raise ValueError("field descriptor needs p,a,[modulus]")
        p, a = int(head[0]), int(head[1])
        modulus = _parse_ints(head[2])
        n, d, m = int(parts[2]), int(parts[3]), int(parts[5])
        rep = _parse_ints(parts[4])
        value = CycInt.deserialize(parts[6])
    except (ValueError, UsageError) as exc:
        raise CacheError(f"corrupt record {line!r}: {exc}") from exc
    if min(n, d, m) < 1 or value.p != p:
        raise CacheError(f"inconsistent record: {line!r}")
    if len(modulus) != a + 1 or modulus[-1] != 1:
        raise CacheError(f"modulus is not monic of degree a: {line!r}")
    if len(rep) != a * d:
        raise CacheError(f"representative has wrong length: {line!r}")
    key = record_key(p, a, modulus, n, d, rep, m)
    return key, value


class SumCache:
    """Append-only line cache of computed sums; safe for concurrent use."""

    def __init__(self, path):
        self.path = str(path)
        self._mem: dict[str, CycInt] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0
        self._load()

    def _load(self):
        try:
            with open(self.path, "r", encoding="ascii") as fh:
                lines = fh.read().splitlines()
        except FileNotFoundError:
            with open(self.path, "w", encoding="ascii") as fh:
                fh.write(CACHE_HEADER + "\n")
            return
        for lineno, line in enumerate(lines, start=1):
            if not line or line.startswith("#"):
                continue
            try:
                key, value = parse_record(line)
            except CacheError as exc:
                raise CacheError(f"{self.path}:{lineno}: {exc}") from None
            old = self._mem.get(key)
            if old is not None and old != value:
                raise CacheError(f"{self.path}:{lineno}: conflicting duplicate for {key}")
            self._mem[key] = value

    def __len__(self):
        return len(self._mem)

    def get(self, key: str):
        with self._lock:
            value = self._mem.get(key)
            if value is None:
                self.misses += 1
            else:
                self.hits += 1
            return value

    def put(self, key: str, value: CycInt):
        with self._lock:
            old = self._mem.get(key)
            if old is not None:
                if old != value:
                    raise CacheError(f"conflicting value for cached key {key}")
                return
            self._mem[key] = value
            with open(self.path, "a", encoding="ascii") as fh:
                fh.write(f"v1|{key}|{value.serialize()}\n")

    def records(self):
        """(line number, key, value) triples in file order, revalidating."""
        out = []
        with open(self.path, "r", encoding="ascii") as fh:
            for lineno, line in enumerate(fh.read().splitlines(), start=1):
                if not line or line.startswith("#"):
                    continue
                key, value = parse_record(line)
                out.append((lineno, key, value))
        return out

    def compact(self):
        """Rewrite the file keeping the first occurrence of each key."""
        kept = []
        seen = set()
        for _, key, value in self.records():
            if key in seen:
                continue
            seen.add(key)
            kept.append((key, value))
        with self._lock:
            with open(self.path, "w", encoding="ascii") as fh:
                fh.write(CACHE_HEADER + "\n")
                for key, value in kept:
                    fh.write(f"v1|{key}|{value.serialize()}\n")
        return len(kept)


# ---------------------------------------------------------------------------


class KloostermanEvaluator:
    """Evaluates Kl_n over a fixed base field with caching and budgets."""

    def __init__(self, base: Field, cache: SumCache | None = None,
                 budget: int = DEFAULT_BUDGET):
        self.base = base
        self.cache = cache
        self.budget = budget

    def _key(self, n: int, point: ClosedPoint, m: int) -> str:
        return record_key(
            self.base.p, self.base.k, self.base.modulus,
            n, point.degree, point.rep, m,
        )

    def kloosterman(self, n: int, point: ClosedPoint, m: int) -> CycInt:
        """Exact Kl_n(t, m) at a closed point t of the base torus."""
        if n < 1 or m < 1:
            raise UsageError("need n >= 1 and m >= 1")
        if point.base != self.base:
            raise UsageError("point does not belong to this base field")
        key = self._key(n, point, m)
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                return hit
        big = make_field(self.base.p, point.field.k * m)
        work = (big.size - 1) ** n
        if work > self.budget:
            raise ResourceError(
                f"sum over (F_{big.size})^{n} needs {work} steps, budget {self.budget}"
            )
        emb = get_embedding(point.field, big)
        value = _direct_sum(n, big, emb.apply(point.rep))
        if self.cache is not None:
            self.cache.put(key, value)
        return value

    def sums_for_factor(self, n: int, point: ClosedPoint):
        """Kl_n(t, m) for m = 1..n+1, the inputs of one local factor."""
        return [self.kloosterman(n, point, m) for m in range(1, n + 2)]

    def kloosterman_table(self, n: int, field: Field):
        return kloosterman_table(n, field, budget=self.budget)


@lru_cache(maxsize=None)
def direct_reference(p: int, n: int, k: int, t_int: int) -> str:
    """Tiny brute-force oracle over F_{p^k}, field arithmetic only.

    Serialised so the cache of this reference stays hashable; intended for
    tests and cache verification at small sizes.
    """
    field = make_field(p, k)
    t = field.from_int(t_int)
    if not any(t):
        raise UsageError("t must be nonzero")
    import itertools

    acc = {}
    units = [field.from_int(v) for v in range(1, field.size)]
    for xs in itertools.product(units, repeat=n):
        prod = field.one
        s = field.zero
        for x in xs:
            prod = field.mul(prod, x)
            s = field.add(s, x)
        s = field.add(s, field.mul(t, field.inv(prod)))
        e = field.trace_abs(s)
        acc[e] = acc.get(e, 0) + 1
    return _fold_counts(p, [acc.get(e, 0) for e in range(p)]).serialize()
