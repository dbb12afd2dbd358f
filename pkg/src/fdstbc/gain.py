"""Exact coding-gain search over codeword difference tuples.

The gain of the code is min |det(dX)|^2 over all nonzero difference
tuples (ds1, ds2, ds3, ds4) in D^4, D the symbol difference set.  Two
routes are implemented and must agree:

* ``exhaustive``   walks all |D|^4 tuples through the plain determinant
  of the difference codeword, det = F(ds1, ds3) + F(ds2, ds4) with
  F(x, y) = (x + r*y) * (-j*conj(r)*conj(x) + conj(y)); pure oracle.

* ``aggregated``   notes that with r = u + j*v on the unit circle and
  t = u - v,

      |det|^2 = (A-B)^2 + 2*t^2*A*B + 2*dt^2 - 2*(A+B)*t*dt

  where dt = Im(C) - Re(C), so the sweep only needs the per-pair
  triples (|x|^2, |y|^2, Im(x*conj(y)) - Re(x*conj(y))) deduplicated
  over D x D, then all pairs of triples.  On integer grids with a
  rational t every quantity is an integer and the minimum is exact.

Completing the square in dt gives
    |det|^2 = (A-B)^2*(2-t^2)/2 + 2*(dt - (A+B)*t/2)^2
so |det|^2 >= (B-A)^2*(u+v)^2/2 for every tuple (the case II floor);
the sweep asserts this on every enumerated pair.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .codes import DesignCoefficient, DifferenceTuple
from .constellations import (Constellation, DifferenceSet, difference_set,
                             make_apsk_grid_preset, make_psk, make_qam,
                             NORM_MIN_DIST)

EXHAUSTIVE_LIMIT = 1e10
AGG_DEFAULT_ABOVE = 8
_FLOAT_TIE = 1e-12
_INT_SENTINEL = np.int64(2) ** 62


@dataclass(frozen=True)
class PairTriple:
    """(|x|^2, |y|^2, x*conj(y)) for one (x, y) in D x D."""

    a: float
    b: float
    c: complex


@dataclass(frozen=True)
class GainReport:
    gain: float
    argmin: DifferenceTuple
    case_of_argmin: str
    case1_min: float
    case2_min: float
    case2_bound_min: float
    method: str
    gain_exact: Fraction | None = None


def pair_triples(diffs: DifferenceSet) -> list[PairTriple]:
    """Deduplicated pair triples over D x D (tolerance 1e-9 per component)."""
    d = diffs.values
    x = np.repeat(d, d.size)
    y = np.tile(d, d.size)
    a = np.abs(x) ** 2
    b = np.abs(y) ** 2
    c = x * np.conj(y)
    tol = 1e-9
    keys = np.stack([np.round(a / tol), np.round(b / tol),
                     np.round(c.real / tol), np.round(c.imag / tol)], axis=1)
    keys = keys.astype(np.int64)
    _, idx = np.unique(keys, axis=0, return_index=True)
    idx.sort()
    return [PairTriple(a=float(a[i]), b=float(b[i]), c=complex(c[i]))
            for i in idx]


def _projected_triples(dvals: np.ndarray, as_int: bool, scale: float = 1.0):
    """Dedup (a, b, g) with g = Im(x*conj(y)) - Re(x*conj(y)).

    Returns (a, b, g, wit_x, wit_y, zero_index).  With as_int the triples
    are exact int64 in grid units (dvals/scale must be Gaussian integers);
    witnesses stay in constellation units either way.
    """
    d = np.asarray(dvals)
    x = np.repeat(d, d.size)
    y = np.tile(d, d.size)
    if as_int:
        xs = x / scale
        ys = y / scale
        xi = np.round(xs.real).astype(np.int64) + 0j
        xi = xi + 1j * np.round(xs.imag).astype(np.int64)
        yi = np.round(ys.real).astype(np.int64) + 0j
        yi = yi + 1j * np.round(ys.imag).astype(np.int64)
        if (np.max(np.abs(xs - xi)) > 1e-9) or (np.max(np.abs(ys - yi)) > 1e-9):
            raise ValueError("differences are not on the integer grid")
        a = np.round(np.abs(xi) ** 2).astype(np.int64)
        b = np.round(np.abs(yi) ** 2).astype(np.int64)
        cc = xi * np.conj(yi)
        g = np.round(cc.imag - cc.real).astype(np.int64)
        ka, kb, kg = a, b, g
    else:
        a = np.abs(x) ** 2
        b = np.abs(y) ** 2
        cc = x * np.conj(y)
        g = cc.imag - cc.real
        tol = 1e-9
        ka = np.round(a / tol).astype(np.int64)
        kb = np.round(b / tol).astype(np.int64)
        kg = np.round(g / tol).astype(np.int64)
    qr = np.round(x.real / 1e-9).astype(np.int64)
    qi = np.round(x.imag / 1e-9).astype(np.int64)
    pr = np.round(y.real / 1e-9).astype(np.int64)
    pi = np.round(y.imag / 1e-9).astype(np.int64)
    order = np.lexsort((pi, pr, qi, qr, kg, kb, ka))
    ka, kb, kg = ka[order], kb[order], kg[order]
    keep = np.ones(ka.size, dtype=bool)
    keep[1:] = (ka[1:] != ka[:-1]) | (kb[1:] != kb[:-1]) | (kg[1:] != kg[:-1])
    a, b, g = a[order][keep], b[order][keep], g[order][keep]
    wx, wy = x[order][keep], y[order][keep]
    zero = np.flatnonzero((a == 0) & (b == 0) & (g == 0))
    if zero.size != 1:
        raise AssertionError("difference set must contain exactly one zero")
    return a, b, g, wx, wy, int(zero[0])


def _collect(cands, val, big, i0, is_int):
    """Append (i, j, val) entries tying this chunk's minimum (capped)."""
    m = val.min()
    if is_int:
        if m >= big:
            return
        take = val == m
    else:
        if not np.isfinite(m):
            return
        take = val <= m + _FLOAT_TIE * max(1.0, abs(m))
    ii, jj = np.nonzero(take)
    if ii.size > 4096:
        order = np.argsort(val[ii, jj], kind="stable")[:4096]
        ii, jj = ii[order], jj[order]
    for k in range(ii.size):
        cands.append((i0 + int(ii[k]), i0 + int(jj[k]), val[ii[k], jj[k]]))


def _sweep_pairs(a, b, g, zero_idx, *, t=None, pq=None, bound_coef):
    """Min |det|^2 over all pairs of triples (upper triangle, i <= j).

    Returns (case1_min, case2_min, bound_min, candidates) where candidates
    is a list of (i, j, val) covering every pair that can tie the overall
    minimum.  Values are q^2 * |det|^2 as int64 when pq is given, plain
    float64 otherwise; bound_min is always float in the same units.
    """
    n = a.size
    is_int = pq is not None
    if is_int:
        p, q = pq
        p, q = np.int64(p), np.int64(q)
        big = _INT_SENTINEL
    else:
        big = np.inf
    c1_min = big
    c2_min = big
    bound_min = np.inf
    cands = []
    chunk = max(1, int(8_000_000 // max(n, 1)))
    for i0 in range(0, n, chunk):
        i1 = min(i0 + chunk, n)
        A = a[i0:i1, None] + a[None, i0:]
        B = b[i0:i1, None] + b[None, i0:]
        D = g[i0:i1, None] + g[None, i0:]
        am_b = A - B
        if is_int:
            val = (q * q) * (am_b * am_b) + (2 * p * p) * (A * B) \
                + (2 * q * q) * (D * D) - (2 * p * q) * ((A + B) * D)
        else:
            val = am_b * am_b + (2.0 * t * t) * (A * B) \
                + 2.0 * (D * D) - (2.0 * t) * ((A + B) * D)
        # keep only the upper triangle: pair (i, j) equals (j, i)
        rows = np.arange(i0, i1)[:, None]
        cols = np.arange(i0, n)[None, :]
        lower = cols < rows
        val = np.where(lower, big, val)
        if i0 <= zero_idx < i1:
            val[zero_idx - i0, zero_idx - i0] = big
        if is_int:
            case1 = A == B
        else:
            case1 = np.abs(am_b) <= 1e-9
        case2 = ~case1 & ~lower
        if case2.any():
            vf = val.astype(np.float64)
            if is_int:
                vf /= float(q) ** 2
            bnd = am_b.astype(np.float64) ** 2 * bound_coef
            if (case2 & (vf < bnd - 1e-9)).any():
                raise RuntimeError("case II lower bound violated; "
                                   "determinant reduction is inconsistent")
            bound_min = min(bound_min, float(bnd[case2].min()))
            c2_min = min(c2_min, val[case2].min())
        m1 = np.where(case1 & ~lower, val, big).min()
        c1_min = min(c1_min, m1)
        _collect(cands, val, big, i0, is_int)
    best = min(c1_min, c2_min)
    if is_int:
        cands = [c for c in cands if c[2] == best]
    else:
        cands = [c for c in cands
                 if c[2] <= best + _FLOAT_TIE * max(1.0, abs(best))]
    return c1_min, c2_min, bound_min, cands


def _argmin_tuple(cands, wx, wy, a, b):
    """Pick the reported argmin deterministically among tied candidates."""
    def key(c):
        i, j, _ = c
        t = (wx[i], wx[j], wy[i], wy[j])
        return tuple(round(abs(z) ** 2, 12) for z in t) + \
            tuple(round(float(np.angle(z)), 12) for z in t)
    i, j, _ = min(cands, key=key)
    tup = DifferenceTuple(ds1=complex(wx[i]), ds2=complex(wx[j]),
                          ds3=complex(wy[i]), ds4=complex(wy[j]))
    if np.asarray(a).dtype.kind == "i":
        case = "I" if a[i] + a[j] == b[i] + b[j] else "II"
    else:
        case = "I" if abs((a[i] + a[j]) - (b[i] + b[j])) <= 1e-9 else "II"
    return tup, case


def _aggregated_gain(c: Constellation, r: DesignCoefficient) -> GainReport:
    dvals = difference_set(c).values
    exact = (c.grid is not None and c.grid.scale_sq is not None
             and r.t_exact is not None)
    bound_coef = (2.0 - r.t ** 2) / 2.0
    if exact:
        a, b, g, wx, wy, z = _projected_triples(dvals, True, c.grid.scale)
        p, q = r.t_exact.numerator, r.t_exact.denominator
        c1, c2, bmin, cands = _sweep_pairs(a, b, g, z, pq=(p, q),
                                           bound_coef=bound_coef)
        scale4 = c.grid.scale_sq ** 2
        qq = q * q
        gain_exact = Fraction(int(min(c1, c2)), qq) * scale4
        tup, case = _argmin_tuple(cands, wx, wy, a, b)
        f4 = float(scale4)
        return GainReport(
            gain=float(gain_exact), argmin=tup, case_of_argmin=case,
            case1_min=float(Fraction(int(c1), qq) * scale4),
            case2_min=float(Fraction(int(c2), qq) * scale4),
            case2_bound_min=bmin * f4,
            method="aggregated", gain_exact=gain_exact)
    a, b, g, wx, wy, z = _projected_triples(dvals, False)
    c1, c2, bmin, cands = _sweep_pairs(a, b, g, z, t=r.t,
                                       bound_coef=bound_coef)
    tup, case = _argmin_tuple(cands, wx, wy, a, b)
    return GainReport(gain=float(min(c1, c2)), argmin=tup,
                      case_of_argmin=case, case1_min=float(c1),
                      case2_min=float(c2), case2_bound_min=bmin,
                      method="aggregated")


def _exhaustive_gain(c: Constellation, r: DesignCoefficient) -> GainReport:
    dvals = difference_set(c).values
    nd = dvals.size
    if float(nd) ** 4 > EXHAUSTIVE_LIMIT:
        raise ValueError(
            f"|D|^4 = {float(nd) ** 4:.3g} exceeds the exhaustive-search "
            f"guard ({EXHAUSTIVE_LIMIT:.0e}); use method='aggregated'")
    x = np.repeat(dvals, nd)
    y = np.tile(dvals, nd)
    rr = r.r
    F = (x + rr * y) * (-1j * np.conj(rr) * np.conj(x) + np.conj(y))
    a = np.abs(x) ** 2
    b = np.abs(y) ** 2
    zero = int(np.flatnonzero((x == 0) & (y == 0))[0])
    bound_coef = (r.u + r.v) ** 2 / 2.0
    n = F.size
    c1_min = np.inf
    c2_min = np.inf
    bound_min = np.inf
    cands = []
    chunk = max(1, int(8_000_000 // max(n, 1)))
    for i0 in range(0, n, chunk):
        i1 = min(i0 + chunk, n)
        det = F[i0:i1, None] + F[None, i0:]
        val = det.real ** 2 + det.imag ** 2
        A = a[i0:i1, None] + a[None, i0:]
        B = b[i0:i1, None] + b[None, i0:]
        rows = np.arange(i0, i1)[:, None]
        cols = np.arange(i0, n)[None, :]
        lower = cols < rows
        val = np.where(lower, np.inf, val)
        if i0 <= zero < i1:
            val[zero - i0, zero - i0] = np.inf
        case1 = np.abs(A - B) <= 1e-9
        case2 = ~case1 & ~lower
        if case2.any():
            bnd = (B - A) ** 2 * bound_coef
            if (case2 & (val < bnd - 1e-9)).any():
                raise RuntimeError("case II lower bound violated")
            bound_min = min(bound_min, float(bnd[case2].min()))
            c2_min = min(c2_min, float(val[case2].min()))
        v1 = np.where(case1 & ~lower, val, np.inf)
        c1_min = min(c1_min, float(v1.min()))
        _collect(cands, val, np.inf, i0, False)
    best = min(c1_min, c2_min)
    cands = [t for t in cands if t[2] <= best + _FLOAT_TIE * max(1.0, best)]
    tup, case = _argmin_tuple(cands, x, y, a, b)
    return GainReport(gain=best, argmin=tup, case_of_argmin=case,
                      case1_min=c1_min, case2_min=c2_min,
                      case2_bound_min=bound_min, method="exhaustive")


def coding_gain(c: Constellation, r: DesignCoefficient,
                method: str | None = None) -> GainReport:
    """Minimum |det|^2 over all nonzero difference tuples of c under r.

    method None picks exhaustive for small constellations (<= 8 points)
    and the aggregated triple-pair sweep otherwise.
    """
    if method is None:
        method = "exhaustive" if len(c) <= AGG_DEFAULT_ABOVE else "aggregated"
    if method == "aggregated":
        return _aggregated_gain(c, r)
    if method == "exhaustive":
        return _exhaustive_gain(c, r)
    raise ValueError(f"unknown method {method!r}")


def coding_gain_scaled(c: Constellation, r: DesignCoefficient,
                       alpha: float, method: str | None = None) -> GainReport:
    """Gain of the constellation scaled by alpha (quartic in alpha)."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    scaled = Constellation(name=c.name, points=c.points * alpha,
                           normalization="scaled", grid=None,
                           ring_radii=None)
    return coding_gain(scaled, r, method=method)


def golden_coding_gain(c: Constellation) -> float:
    """Coding gain of the reference Golden code over constellation c.

    det factors through q(x, y) = x^2 + x*y - y^2 on the two symbol
    pairs: det = (2/5)*(2+j)*(q(ds1, ds2) - j*q(ds3, ds4)), so the
    search only needs the deduplicated q values over D x D.
    """
    d = difference_set(c).values
    x = np.repeat(d, d.size)
    y = np.tile(d, d.size)
    nz = ~((x == 0) & (y == 0))
    qv = x * x + x * y - y * y
    qnz = np.unique(qv[nz])
    m = np.abs(qnz[:, None] - 1j * qnz[None, :]) ** 2
    best = float(m.min())
    # tuples where one symbol pair is identically zero
    best = min(best, float(np.min(np.abs(qnz) ** 2)))
    return (4.0 / 5.0) * best


def vanishing_probe(family: str, sizes=None, r_policy: str = "auto"):
    """Gain at min-dist-1 across sizes of one family; probes for gain decay.

    Integer-grid families keep the analytic coefficient; PSK re-optimizes
    per size (r_policy "analytic" forces the integer-grid optimum).
    """
    from . import optimizer  # local import, optimizer depends on this module

    if family == "qam":
        sizes = sizes or (4, 16, 64)
        make = lambda m: make_qam(m, NORM_MIN_DIST)
    elif family == "psk":
        sizes = sizes or (4, 8)
        make = lambda m: make_psk(m, NORM_MIN_DIST)
    elif family == "apsk-grid":
        sizes = sizes or (8, 16)
        make = lambda m: make_apsk_grid_preset(f"apsk{m}-grid", NORM_MIN_DIST)
    else:
        raise ValueError(f"unknown family {family!r}")
    out = []
    for m in sizes:
        c = make(m)
        if r_policy == "analytic" or (r_policy == "auto" and c.grid is not None):
            r = optimizer.analytic_integer_optimum()[0]
            rep = coding_gain(c, r)
        else:
            r, rep = optimizer.optimize(c)
        out.append((m, rep.gain))
    return out
