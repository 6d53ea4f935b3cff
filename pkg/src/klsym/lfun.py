"""Local factors and symmetric power L-series built from exponential sums.

The local factor at a closed point t of degree d over F_q is the degree
n+1 polynomial P(T) = prod_j (1 - pi_j T) whose eigenvalue power sums are
p_m = (-1)^n Kl_n(t, m).  Coefficients are recovered by the determinant
form of the Newton identities (division-free, then one exact division by
m!), so no p-adic inversions touch the exact layer.  Symmetric powers come
from the characteristic polynomial of Sym^k of the companion matrix of the
reciprocal-root polynomial, again division-free via Berkowitz.  The
infinite symmetric power local series needs the eigenvalues themselves and
is assembled p-adically from a slope split.  Euler products multiply
inverse local factors over all closed points up to a degree cap and verify
Galois descent of every global coefficient.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from .cyclo import CycInt
from .errors import (
    FunctionalEquationFindingError,
    IntegralityFindingError,
    SignConventionFindingError,
    UsageError,
)
from .expsum import KloostermanEvaluator
from .ff import ClosedPoint, points_up_to
from .padic import PadicCyc, PadicExponent, hensel_unit_root, one_unit_power, ord_p, slope_split


# ---------------------------------------------------------------------------
# Newton identities, determinant form


def _det_expansion(rows):
    """Division-free determinant by first-row expansion with column memo."""
    m = len(rows)
    memo = {}

    def rec(i, cols):
        if i == m:
            return CycInt.from_int(rows[0][0].p, 1)
        key = cols
        got = memo.get(key)
        if got is not None:
            return got
        acc = None
        for pos, j in enumerate(cols):
            entry = rows[i][j]
            if not entry:
                continue
            sub = rec(i + 1, cols[:pos] + cols[pos + 1 :])
            term = entry * sub
            if pos % 2:
                term = -term
            acc = term if acc is None else acc + term
        if acc is None:
            acc = CycInt.zero(rows[0][0].p)
        memo[key] = acc
        return acc

    return rec(0, tuple(range(m)))


def elementary_from_power_sums(power_sums, count):
    """e_1..e_count from p_1..p_count: m! e_m is a Toeplitz determinant."""
    p = power_sums[0].p
    one = CycInt.from_int(p, 1)
    zero = CycInt.zero(p)
    out = []
    for m in range(1, count + 1):
        rows = []
        for i in range(m):
            row = []
            for j in range(m):
                if j <= i:
                    row.append(power_sums[i - j])
                elif j == i + 1:
                    row.append(CycInt.from_int(p, i + 1))
                else:
                    row.append(zero)
            rows.append(row)
        det = _det_expansion(rows)
        out.append(det.divide_exact_int(math.factorial(m)))
    return out


def eigen_power_sums(coeffs, count):
    """p_1..p_count of the reciprocal roots of sum a_i T^i (a_0 = 1)."""
    p = coeffs[0].p
    deg = len(coeffs) - 1
    ps = []
    for m in range(1, count + 1):
        acc = CycInt.zero(p)
        for i in range(1, min(m - 1, deg) + 1):
            acc = acc + coeffs[i] * ps[m - i - 1]
        if m <= deg:
            acc = acc + coeffs[m] * m
        ps.append(-acc)
    return ps


# ---------------------------------------------------------------------------
# local factors


@dataclass(frozen=True)
class LocalFactor:
    """P(T) = prod (1 - pi_j T) at one closed point; coeffs[0] == 1."""

    point: ClosedPoint
    n: int
    coeffs: tuple
    sign: int  # +1 when the leading coefficient is (-1)^(n+1) q_t^(n(n+1)/2)

    @property
    def degree(self):
        return len(self.coeffs) - 1

    @property
    def q_point(self):
        return self.point.base.size ** self.point.degree


def _factor_from_power_sums(point, n, power_sums):
    es = elementary_from_power_sums(power_sums, n + 1)
    p = power_sums[0].p
    coeffs = [CycInt.from_int(p, 1)]
    for m, e in enumerate(es, start=1):
        coeffs.append(-e if m % 2 else e)
    return coeffs


def local_factor(ev: KloostermanEvaluator, n: int, point: ClosedPoint) -> LocalFactor:
    """Local factor from the sums Kl_n(t, 1..n+1), with invariant checks.

    The leading coefficient must be +-q_t^(n(n+1)/2); a wrong magnitude that
    a global sign flip of the power sums would repair is reported as
    SignConventionFindingError, anything else as a functional equation
    finding.  The sign actually observed is recorded on the factor.
    """
    sums = ev.sums_for_factor(n, point)
    sgn = -1 if n % 2 else 1
    power_sums = [s * sgn for s in sums]
    try:
        coeffs = _factor_from_power_sums(point, n, power_sums)
    except ValueError as exc:
        raise FunctionalEquationFindingError(
            f"power sums at {point.rep} give non-integral coefficients: {exc}",
            witness={"point": point.rep}) from None
    q_t = point.base.size ** point.degree
    magnitude = q_t ** (n * (n + 1) // 2)
    expected = magnitude if (n + 1) % 2 == 0 else -magnitude
    try:
        lead = coeffs[-1].as_integer()
    except ValueError:
        lead = None
    if lead not in (expected, -expected):
        flipped = _factor_from_power_sums(point, n, sums)
        try:
            flipped_lead = flipped[-1].as_integer()
        except ValueError:
            flipped_lead = None
        if sgn == -1 and flipped_lead in (expected, -expected):
            raise SignConventionFindingError(
                f"leading coefficient {lead} at {point.rep} only matches "
                f"+-{magnitude} after dropping the (-1)^n normalisation",
                witness={"point": point.rep, "degree": point.degree})
        raise FunctionalEquationFindingError(
            f"leading coefficient {lead} at point {point.rep} is not "
            f"+-{magnitude}", witness={"point": point.rep, "lead": lead})
    sign = 1 if lead == expected else -1
    return LocalFactor(point, n, tuple(coeffs), sign)


# ---------------------------------------------------------------------------
# finite symmetric powers


def _companion(coeffs):
    """Multiplication-by-X matrix on Z[zeta][X] / (X^deg P(1/X) X^deg...).

    Columns are images of the basis 1, X, ..., X^(deg-1) of the quotient by
    the monic reciprocal-root polynomial E(X) = X^deg P(1/X).
    """
    p = coeffs[0].p
    deg = len(coeffs) - 1
    zero = CycInt.zero(p)
    one = CycInt.from_int(p, 1)
    # E low-first: e[i] = a_{deg-i}
    e = list(reversed(coeffs))
    M = [[zero] * deg for _ in range(deg)]
    for j in range(deg - 1):
        M[j + 1][j] = one
    for i in range(deg):
        M[i][deg - 1] = -e[i]
    return M


def _sym_power_matrix(M, k):
    """Sym^k of a matrix in the monomial basis, lex-ordered exponents."""
    p = M[0][0].p
    dim = len(M)
    basis = sorted(_exponent_tuples(dim, k), reverse=True)
    index = {b: i for i, b in enumerate(basis)}
    zero = CycInt.zero(p)
    cols = []
    lin_forms = [[M[i][j] for i in range(dim)] for j in range(dim)]  # image of x_j
    for alpha in basis:
        poly = {(0,) * dim: CycInt.from_int(p, 1)}
        for var, mult in enumerate(alpha):
            for _ in range(mult):
                poly = _poly_mul_linear(poly, lin_forms[var], dim)
        col = [zero] * len(basis)
        for mono, c in poly.items():
            col[index[mono]] = c
        cols.append(col)
    D = len(basis)
    return [[cols[j][i] for j in range(D)] for i in range(D)]


def _exponent_tuples(dim, k):
    for comb in itertools.combinations_with_replacement(range(dim), k):
        t = [0] * dim
        for c in comb:
            t[c] += 1
        yield tuple(t)


def _poly_mul_linear(poly, form, dim):
    out = {}
    for mono, c in poly.items():
        for var, fc in enumerate(form):
            if not fc:
                continue
            key = list(mono)
            key[var] += 1
            key = tuple(key)
            v = c * fc
            if key in out:
                out[key] = out[key] + v
            else:
                out[key] = v
    return out


def _berkowitz_charpoly(M):
    """Division-free characteristic polynomial, highest degree first."""
    p = M[0][0].p
    one = CycInt.from_int(p, 1)
    zero = CycInt.zero(p)
    D = len(M)
    V = [one, -M[0][0]]
    for r in range(1, D):
        A = [row[:r] for row in M[:r]]
        R = M[r][:r]
        Ccol = [M[i][r] for i in range(r)]
        a_rr = M[r][r]
        q = [one, -a_rr]
        vec = Ccol
        for i in range(2, r + 2):
            dot = zero
            for x, y in zip(R, vec):
                dot = dot + x * y
            q.append(-dot)
            if i < r + 1:
                vec = [sum((A[s][t] * vec[t] for t in range(r)), zero) for s in range(r)]
        newV = [zero] * (r + 2)
        for i in range(r + 2):
            s = zero
            for j in range(min(i, r) + 1):
                if i - j < len(q):
                    s = s + q[i - j] * V[j]
            newV[i] = s
        V = newV
    return V


def sym_k_factor(lf: LocalFactor, k: int):
    """Coefficients of prod over |alpha| = k of (1 - pi^alpha T).

    Degree binom(n+k, k).  Division-free throughout; the result stays in
    Z[zeta_p] exactly.
    """
    if k < 0:
        raise UsageError("symmetric power must be nonnegative")
    p = lf.coeffs[0].p
    if k == 0:
        return [CycInt.from_int(p, 1)]
    M = _sym_power_matrix(_companion(list(lf.coeffs)), k)
    V = _berkowitz_charpoly(M)
    # char(X) = sum V[i] X^(D-i), so T^D char(1/T) = sum V[i] T^i
    return V


# ---------------------------------------------------------------------------
# truncated series utilities (plain coefficient lists, index = T power)


def inverse_factor_series(coeffs, R):
    """First R+1 coefficients of 1 / sum a_i T^i with a_0 = 1, exact."""
    p = coeffs[0].p
    deg = len(coeffs) - 1
    out = [CycInt.from_int(p, 1)]
    for r in range(1, R + 1):
        acc = CycInt.zero(p)
        for i in range(1, min(r, deg) + 1):
            acc = acc + coeffs[i] * out[r - i]
        out.append(-acc)
    return out


def convolve_truncated(A, B, D, zero):
    out = []
    for r in range(D + 1):
        acc = zero
        for i in range(max(0, r - len(B) + 1), min(r, len(A) - 1) + 1):
            acc = acc + A[i] * B[r - i]
        out.append(acc)
    return out


# ---------------------------------------------------------------------------
# infinite symmetric power and unit-root series


@dataclass
class LocalSeries:
    """Inverse local factor expanded to the needed T-degree at one point."""

    point: ClosedPoint
    coeffs: list  # index r is the coefficient of T^(r * degree)
    cert: int | None = None  # uniform pi-adic certificate; None when exact
    info: dict = field(default_factory=dict)


def sym_inf_weights(n: int, wmax: int):
    """All (i_1..i_n) >= 0 with weight sum j*i_j <= wmax, lex order."""
    ranges = [range(wmax // j + 1) for j in range(1, n + 1)]
    out = []
    for tup in itertools.product(*ranges):
        if sum(j * i for j, i in zip(range(1, n + 1), tup)) <= wmax:
            out.append(tup)
    return out


def sym_inf_local(lf: LocalFactor, kappa: PadicExponent, V: int, R: int,
                  a: int) -> LocalSeries:
    """Series of the infinite symmetric power Euler factor at one point.

    Eigenvalues are pi_0^(kappa - |i|) prod pi_j^(i_j) over integer tuples
    i >= 0; tuples of weight w = sum j i_j with a d w (p-1) >= V contribute
    only above the target precision and are dropped.  The returned
    certificate folds the slope-split, 1-unit-power and truncation costs.
    """
    p = lf.coeffs[0].p
    d = lf.point.degree
    ad = a * d
    N = -(-V // (p - 1)) + 1
    pis, ledger = slope_split(list(lf.coeffs), a, d, N)
    pi0 = pis[0]
    wmax = (V - 1) // (ad * (p - 1)) if ad * (p - 1) < V else 0
    tuples = sym_inf_weights(lf.n, wmax)
    pow_cache = {}
    out = [PadicCyc.one(p, pi0.N)] + [PadicCyc.zero(p, pi0.N)] * R
    cert = V
    for tup in tuples:
        size = sum(tup)
        lam = pow_cache.get(size)
        if lam is None:
            lam = one_unit_power(pi0, kappa.minus_int(size), V)
            pow_cache[size] = lam
        for j, i_j in enumerate(tup, start=1):
            if i_j:
                lam = lam * pis[j] ** i_j
        cert = min(cert, lam.vcert)
        for r in range(1, R + 1):
            out[r] = out[r] + lam * out[r - 1]
    cert = min([cert] + [c.vcert for c in out])
    return LocalSeries(lf.point, out, cert,
                       {"tuples": len(tuples), "wmax": wmax, "split": ledger})


def unit_root_local(lf: LocalFactor, kappa: PadicExponent, V: int, R: int) -> LocalSeries:
    """Series of (1 - pi_0^kappa T^d)^(-1): the slope-zero part alone."""
    p = lf.coeffs[0].p
    N = -(-V // (p - 1)) + 1
    pi0 = hensel_unit_root(list(lf.coeffs), N)
    u = one_unit_power(pi0, kappa, V)
    out = [PadicCyc.one(p, u.N)]
    for r in range(R):
        out.append(out[-1] * u)
    cert = min([V, u.vcert] + [c.vcert for c in out])
    return LocalSeries(lf.point, out, cert, {})


def sym_inf_local_hsum(lf: LocalFactor, kappa: PadicExponent, V: int, R: int,
                       a: int) -> LocalSeries:
    """Independent route to the same series through eigenvalue power sums.

    Uses p~_m = pi_0^(kappa m) prod_j (1 - (pi_j/pi_0)^m)^(-1) and the
    log-derivative recurrence r c_r = sum p~_m c_(r-m); the division by r
    costs ord_p(r) digits, which the certificate tracks.
    """
    p = lf.coeffs[0].p
    d = lf.point.degree
    N = -(-V // (p - 1)) + 1 + sum(ord_p(p, r) for r in range(1, R + 1))
    pis, _ = slope_split(list(lf.coeffs), a, d, N)
    pi0 = pis[0]
    inv0 = pi0.unit_inverse()
    ratios = [pi * inv0 for pi in pis[1:]]
    ptil = []
    for m in range(1, R + 1):
        val = one_unit_power(pi0, kappa.times_int(m), V)
        for rho in ratios:
            one = PadicCyc.one(p, val.N)
            val = val * (one - rho ** m).unit_inverse()
        ptil.append(val)
    out = [PadicCyc.one(p, pi0.N)]
    for r in range(1, R + 1):
        acc = ptil[r - 1] * out[0]
        for m in range(1, r):
            acc = acc + ptil[m - 1] * out[r - m]
        out.append(acc.divide_exact_int(r))
    cert = min([V] + [c.vcert for c in out])
    return LocalSeries(lf.point, out, cert, {})


# ---------------------------------------------------------------------------
# Euler products


@dataclass
class GlobalSeries:
    coeffs: list  # exact CycInt or PadicCyc, index = power of T
    cert: int | None
    integers: list | None  # populated in exact mode


def _check_coverage(base, contributions, D):
    expected = {(pt.degree, pt.rep) for pt in points_up_to(base, D)}
    got = [(ls.point.degree, ls.point.rep) for ls in contributions]
    if len(got) != len(set(got)):
        raise UsageError("duplicate closed points in Euler product")
    missing = expected - set(got)
    extra = set(got) - expected
    if missing or extra:
        raise UsageError(
            f"Euler product coverage mismatch at degree {D}: "
            f"missing {sorted(missing)}, extra {sorted(extra)}")


def euler_product(base, contributions, D: int) -> GlobalSeries:
    """Multiply inverse local factors over all closed points of degree <= D.

    Contributions are merged in canonical point order, so the result does
    not depend on the order the caller produced them in.  In exact mode
    every global coefficient must be a rational integer; in p-adic mode it
    must be Galois-invariant to the uniform certificate.  Violations raise
    IntegralityFindingError naming the first bad coefficient.
    """
    contributions = sorted(contributions, key=lambda ls: ls.point.sort_key())
    _check_coverage(base, contributions, D)
    p = base.p
    exact = all(ls.cert is None for ls in contributions)
    if not exact and any(ls.cert is None for ls in contributions):
        raise UsageError("cannot mix exact and p-adic local series")
    for ls in contributions:
        need = D // ls.point.degree
        if len(ls.coeffs) < need + 1:
            raise UsageError(f"local series at {ls.point.rep} too short for degree {D}")
    if exact:
        zero = CycInt.zero(p)
        acc = [CycInt.from_int(p, 1)] + [zero] * D
    else:
        N = min(c.N for ls in contributions for c in ls.coeffs)
        zero = PadicCyc.zero(p, N)
        acc = [PadicCyc.one(p, N)] + [zero] * D
    for ls in contributions:
        d = ls.point.degree
        inflated = [zero] * (D + 1)
        ok = [c if exact else c.with_precision(N) for c in ls.coeffs]
        inflated[0] = ok[0]
        for r in range(1, len(ok)):
            if r * d <= D:
                inflated[r * d] = ok[r]
        acc = convolve_truncated(acc, inflated, D, zero)
    if exact:
        integers = []
        for r, c in enumerate(acc):
            try:
                integers.append(c.as_integer())
            except ValueError:
                raise IntegralityFindingError(
                    f"coefficient of T^{r} is not a rational integer: {c!r}",
                    witness={"r": r}) from None
        return GlobalSeries(acc, None, integers)
    cert = min(ls.cert for ls in contributions)
    cert = min([cert] + [c.vcert for c in acc])
    for r, c in enumerate(acc):
        for g in range(2, p):
            diff = (c.galois(g) - c).rep.pi_val()
            if diff is not None and diff < cert:
                raise IntegralityFindingError(
                    f"coefficient of T^{r} moves under zeta -> zeta^{g} "
                    f"below the certificate {cert}",
                    witness={"r": r, "galois": g, "val": diff})
    return GlobalSeries(acc, cert, None)


# ---------------------------------------------------------------------------
# independent global route: trace sums over extension fields


def trace_sums_route(ev: KloostermanEvaluator, n: int, k: int, D: int):
    """L(Sym^k) coefficients from point counts over extension fields.

    Completely bypasses local factors: S_m sums the m-th Sym^k Frobenius
    trace over all rational points of the torus over F_(q^m), and
    r c_r = sum_m S_m c_(r-m).  Exact; divisions are certified exact.
    Intended as a test oracle at tiny sizes.
    """
    base = ev.base
    p = base.p
    S = []
    for m in range(1, D + 1):
        big_k = base.k * m
        from .ff import make_field

        big = make_field(p, big_k)
        table_cache = {}
        total = CycInt.zero(p)
        sgn = -1 if n % 2 else 1
        for t_int in range(1, big.size):
            t = big.from_int(t_int)
            tab = table_cache.get(n)
            if tab is None:
                tab = ev.kloosterman_table(n, big)
                table_cache[n] = tab
            if k == 1:
                total = total + tab[t] * sgn
            else:
                # power sums of Frobenius at t over F_(q^m): need Kl over
                # extensions of big; use the table of the composite field
                ps = []
                for i in range(1, k + 1):
                    comp = make_field(p, big_k * i)
                    ctab = table_cache.get((n, i))
                    if ctab is None:
                        ctab = ev.kloosterman_table(n, comp)
                        table_cache[(n, i)] = ctab
                    from .ff import get_embedding

                    emb = get_embedding(big, comp)
                    ps.append(ctab[emb.apply(t)] * sgn)
                # complete homogeneous h_k from power sums, exact divisions
                hs = [CycInt.from_int(p, 1)]
                for j in range(1, k + 1):
                    acc = CycInt.zero(p)
                    for i in range(1, j + 1):
                        acc = acc + ps[i - 1] * hs[j - i]
                    hs.append(acc.divide_exact_int(j))
                total = total + hs[k]
        S.append(total)
    out = [CycInt.from_int(p, 1)]
    for r in range(1, D + 1):
        acc = CycInt.zero(p)
        for m in range(1, r + 1):
            acc = acc + S[m - 1] * out[r - m]
        out.append(acc.divide_exact_int(r))
    return out
