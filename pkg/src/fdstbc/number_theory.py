"""Integer identities behind the worst-case gain analysis.

Three executable facts about sums of four squares, checked
exhaustively over bounded ranges rather than proved:

  1. dichotomy: if 2^(2k) | a^2+b^2+c^2+d^2 then 2^k divides either
     all of a, b, c, d or none of them;
  2. the four-square product identity (t1, t2, t3, t4 below);
  3. if two quadruples share a norm divisible by 2^k, the cross term
     t1 + t2 is divisible by 2^k as well.

Fact 3 is the glue that pins where the dt values of a case-I row can
sit: every attainable dt at a row with A = 2^k*m (m odd) is a multiple
of 2^k, which caps the case-I gain of any integer-grid constellation
at 1/2.  ``verify_lemma1_bound`` re-derives that cap from an
enumerated row table.
"""

from dataclasses import dataclass
from fractions import Fraction
import itertools

import numpy as np

from .optimizer import build_case1_table

ALL_DIVISIBLE = "all-divisible"
NONE_DIVISIBLE = "none-divisible"


def _v2(n: int) -> int:
    """2-adic valuation of a positive integer."""
    return (n & -n).bit_length() - 1


@dataclass(frozen=True)
class FourSquareWitness:
    """One checked instance of the divisibility dichotomy."""

    a: int
    b: int
    c: int
    d: int
    k: int
    classification: str


def classify_four_square(a: int, b: int, c: int, d: int,
                         k: int) -> FourSquareWitness:
    """Classify (a, b, c, d) with 2^(2k) | a^2+b^2+c^2+d^2.

    Returns the witness with classification ALL_DIVISIBLE or
    NONE_DIVISIBLE.  Raises ValueError when the precondition fails and
    RuntimeError if the dichotomy itself fails, which no integer input
    can trigger.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    s = a * a + b * b + c * c + d * d
    if s % (1 << (2 * k)) != 0:
        raise ValueError(f"2^{2 * k} does not divide {s}")
    if k >= 1:
        half = 1 << (k - 1)
        if any(x % half != 0 for x in (a, b, c, d)):
            raise RuntimeError(
                f"2^{k - 1} should divide each of {(a, b, c, d)}")
    full = 1 << k
    hits = sum(x % full == 0 for x in (a, b, c, d))
    if hits == 4:
        cls = ALL_DIVISIBLE
    elif hits == 0:
        cls = NONE_DIVISIBLE
    else:
        raise RuntimeError(
            f"dichotomy failed for {(a, b, c, d)} at k={k}: {hits}/4")
    return FourSquareWitness(a, b, c, d, k, cls)


def euler_four_square(a, b, c, d, e, f, g, h):
    """Product form of two four-square sums.

    Returns (t1, t2, t3, t4) with
    t1^2 + t2^2 + t3^2 + t4^2 == (a^2+b^2+c^2+d^2)(e^2+f^2+g^2+h^2).
    """
    t1 = a * e + b * f + c * g + d * h
    t2 = a * f - b * e + c * h - d * g
    t3 = a * g - b * h - c * e + d * f
    t4 = a * h + b * g - c * f - d * e
    return t1, t2, t3, t4


def check_cross_term_divisibility(a, b, c, d, e, f, g, h, k: int) -> bool:
    """True when 2^k divides t1 + t2 for equal-norm quadruples.

    Preconditions: the two quadruples have the same sum of squares and
    2^k divides it.  A False return would falsify the divisibility
    fact, so callers treat it as a tripwire.
    """
    s1 = a * a + b * b + c * c + d * d
    s2 = e * e + f * f + g * g + h * h
    if s1 != s2:
        raise ValueError(f"norms differ: {s1} != {s2}")
    if s1 % (1 << k) != 0:
        raise ValueError(f"2^{k} does not divide {s1}")
    t1, t2, _, _ = euler_four_square(a, b, c, d, e, f, g, h)
    return (t1 + t2) % (1 << k) == 0


def min_offset(t, m_max: int):
    """Minimum of |m*t - n| over odd m in [1, m_max] and integers n.

    Returns (value, m, n) for the smallest achieving m.  Exact when t
    is a Fraction.  For any t the value is at most 1/2, with equality
    exactly when t is a half-odd-integer; on the design range
    |t| <= sqrt(2) that means t = +-1/2.
    """
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    best = None
    for m in range(1, m_max + 1, 2):
        x = m * t
        n = int(x) if x >= 0 else -int(-x)
        for cand in (n - 1, n, n + 1):
            off = abs(x - cand)
            if best is None or off < best[0]:
                best = (off, m, cand)
    return best


@dataclass(frozen=True)
class Lemma1BoundReport:
    """Case-I gain bound check for one integer-grid constellation."""

    n_rows: int
    divisibility_ok: bool
    offset: float
    case1_gain_grid: float
    bound_met: bool
    equality_at_half: bool


def verify_lemma1_bound(c, t) -> Lemma1BoundReport:
    """Check the 1/2 case-I gain cap for an integer-grid constellation.

    Builds the (A, dt) row table in grid units, confirms every dt at a
    row A = 2^k*m (m odd) is a multiple of 2^k, then evaluates
    2*min|A*t - dt|^2 and compares against 1/2.  t may be a float or a
    Fraction; Fractions are evaluated exactly.
    """
    tab = build_case1_table(c)
    if not tab.grid_units:
        raise ValueError("constellation differences are not on an "
                         "integer grid")
    div_ok = True
    for a_val, evals in zip(tab.a_values, tab.d2_values):
        mod = 1 << _v2(int(a_val))
        if np.any(evals % mod != 0):
            div_ok = False
    a_flat, e_flat = tab.flat_rows()
    if isinstance(t, Fraction):
        p, q = t.numerator, t.denominator
        off = Fraction(int(np.abs(a_flat * p - e_flat * q).min()), q)
        gain = 2 * off * off
        equality = gain == Fraction(1, 2)
        bound_met = gain <= Fraction(1, 2)
    else:
        off = float(np.abs(a_flat * float(t) - e_flat).min())
        gain = 2.0 * off * off
        equality = abs(gain - 0.5) <= 1e-12
        bound_met = gain <= 0.5 + 1e-12
    return Lemma1BoundReport(
        n_rows=tab.n_rows,
        divisibility_ok=div_ok,
        offset=float(off),
        case1_gain_grid=float(gain),
        bound_met=bool(bound_met),
        equality_at_half=bool(equality),
    )


@dataclass(frozen=True)
class SweepResult:
    label: str
    checked: int
    failures: int

    @property
    def ok(self) -> bool:
        return self.failures == 0


def sweep_dichotomy(limit: int = 64, k_max: int = 5) -> SweepResult:
    """Exhaust the dichotomy over 0 <= a,b,c,d <= limit, k <= k_max.

    Signs are irrelevant (only squares and |x| divisibility enter), so
    the non-negative orthant covers the full +-limit box.
    """
    n = limit + 1
    b, c, d = np.meshgrid(np.arange(n, dtype=np.int64),
                          np.arange(n, dtype=np.int64),
                          np.arange(n, dtype=np.int64), indexing="ij")
    b, c, d = b.ravel(), c.ravel(), d.ravel()
    s_bcd = b * b + c * c + d * d
    checked = 0
    failures = 0
    for a in range(n):
        s = s_bcd + a * a
        for k in range(k_max + 1):
            pre = s % (1 << (2 * k)) == 0
            if not pre.any():
                continue
            full = 1 << k
            hits = ((a % full == 0) + (b[pre] % full == 0).astype(np.int64)
                    + (c[pre] % full == 0) + (d[pre] % full == 0))
            checked += int(pre.sum())
            failures += int(((hits != 0) & (hits != 4)).sum())
            if k >= 1:
                half = 1 << (k - 1)
                lows = ((a % half == 0)
                        + (b[pre] % half == 0).astype(np.int64)
                        + (c[pre] % half == 0) + (d[pre] % half == 0))
                failures += int((lows != 4).sum())
    return SweepResult("four-square dichotomy", checked, failures)


def sweep_euler_identity(n: int = 10_000, limit: int = 64,
                         seed: int = 0) -> SweepResult:
    """Check the product identity on n random integer 8-tuples."""
    rng = np.random.default_rng(seed)
    v = rng.integers(-limit, limit + 1, size=(n, 8)).astype(np.int64)
    a, b, c, d, e, f, g, h = (v[:, i] for i in range(8))
    t1, t2, t3, t4 = euler_four_square(a, b, c, d, e, f, g, h)
    lhs = t1 * t1 + t2 * t2 + t3 * t3 + t4 * t4
    rhs = (a * a + b * b + c * c + d * d) * (e * e + f * f + g * g + h * h)
    return SweepResult("product identity (random)", n,
                       int((lhs != rhs).sum()))


def sweep_cross_term_exhaustive(limit: int = 8,
                                k_max: int = 4) -> SweepResult:
    """Exhaust cross-term divisibility over |values| <= limit, k <= k_max.

    Groups all quadruples by norm S, then checks every ordered pair
    within each group with v2(S) >= 1 via one integer matmul per group:
    t1 + t2 = a(e+f) + b(f-e) + c(g+h) + d(h-g).
    """
    r = np.arange(-limit, limit + 1, dtype=np.int64)
    quads = np.stack(np.meshgrid(r, r, r, r, indexing="ij"),
                     axis=-1).reshape(-1, 4)
    s = (quads * quads).sum(axis=1)
    order = np.argsort(s, kind="stable")
    quads, s = quads[order], s[order]
    bounds = np.flatnonzero(np.diff(s)) + 1
    starts = np.concatenate(([0], bounds))
    stops = np.concatenate((bounds, [s.size]))
    checked = 0
    failures = 0
    for lo, hi in zip(starts, stops):
        sval = int(s[lo])
        if sval == 0:
            continue
        k = min(_v2(sval), k_max)
        if k == 0:
            continue
        x = quads[lo:hi]
        w = np.stack([x[:, 0] + x[:, 1], x[:, 1] - x[:, 0],
                      x[:, 2] + x[:, 3], x[:, 3] - x[:, 2]], axis=1)
        cross = x @ w.T
        checked += cross.size
        failures += int((cross % (1 << k) != 0).sum())
    return SweepResult("cross-term divisibility (exhaustive)",
                       checked, failures)


def _representations_by_norm(limit: int):
    """Sorted non-negative quadruples indexed by norm.

    Returns (quads, start, count) where quads[start[S]:start[S]+count[S]]
    lists every sorted quadruple 0 <= a <= b <= c <= d <= limit with
    a^2+b^2+c^2+d^2 = S.
    """
    quads = np.array(
        list(itertools.combinations_with_replacement(range(limit + 1), 4)),
        dtype=np.int64)
    s = (quads * quads).sum(axis=1)
    order = np.argsort(s, kind="stable")
    quads, s = quads[order], s[order]
    smax = 4 * limit * limit
    count = np.bincount(s, minlength=smax + 1)
    start = np.concatenate(([0], np.cumsum(count)[:-1]))
    return quads, start, count


def sweep_cross_term_random(n: int = 100_000, limit: int = 64,
                            seed: int = 0) -> SweepResult:
    """Cross-term divisibility on n random preconditioned pairs.

    Draws (a, b, c, d) uniformly in the +-limit box, then picks a
    second quadruple of the same norm from a representation table,
    with random signs and a random coordinate order.
    """
    rng = np.random.default_rng(seed)
    quads, start, count = _representations_by_norm(limit)
    x = rng.integers(-limit, limit + 1, size=(n, 4)).astype(np.int64)
    s = (x * x).sum(axis=1)
    pick = start[s] + (rng.random(n) * count[s]).astype(np.int64)
    y = quads[pick]
    y = y * (rng.integers(0, 2, size=(n, 4)) * 2 - 1)
    perm = np.argsort(rng.random((n, 4)), axis=1)
    y = np.take_along_axis(y, perm, axis=1)
    t1, t2, _, _ = euler_four_square(x[:, 0], x[:, 1], x[:, 2], x[:, 3],
                                     y[:, 0], y[:, 1], y[:, 2], y[:, 3])
    cross = t1 + t2
    nz = s > 0
    k = np.zeros(n, dtype=np.int64)
    k[nz] = np.log2(s[nz] & -s[nz]).astype(np.int64)
    failures = int((cross % (1 << k) != 0).sum())
    return SweepResult("cross-term divisibility (random)", n, failures)


def run_sweeps(size: str = "full") -> list:
    """All lemma sweeps at a named size ("small" or "full")."""
    if size == "full":
        return [
            sweep_dichotomy(limit=64, k_max=5),
            sweep_euler_identity(n=10_000),
            sweep_cross_term_exhaustive(limit=8, k_max=4),
            sweep_cross_term_random(n=100_000),
        ]
    if size == "small":
        return [
            sweep_dichotomy(limit=16, k_max=3),
            sweep_euler_identity(n=1_000),
            sweep_cross_term_exhaustive(limit=4, k_max=3),
            sweep_cross_term_random(n=10_000, limit=16),
        ]
    raise ValueError(f"unknown sweep size {size!r}")
