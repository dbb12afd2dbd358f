"""Monte Carlo 2x2 link simulation with exhaustive-ML and fast decoders.

Channel model: quasi-static Rayleigh, H constant over one codeword
(two channel uses), entries i.i.d. CN(0, 1), perfectly known at the
receiver.  Receive equation y_tj = sum_i h_ij * x_it + noise with
noise CN(0, N0) per complex entry.

Power convention: codeword entries are scaled by 1/sqrt(2) at
transmit so each antenna radiates average power 1 for unit-power
symbols (every entry superposes two symbols).  SNR is defined as
2/N0: total received signal power per receive antenna per channel
use over the noise variance.  The scaling is folded into an
effective channel before decoding, so both decoders see the plain
Y = X^T H + W model.

The fast decoder is exact ML with M^2 hypothesis loops instead of
M^4: condition on (s3, s4), cancel their contribution, and the
residual is an Alamouti-type system in (s1, s2) whose equivalent
channel columns are exactly orthogonal, so s1 and s2 decouple into
independent matched-filter projections plus nearest-point slicing.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
import math
import time

import numpy as np

from .codes import DesignCoefficient
from .constellations import Constellation

TX_SCALE = 1.0 / math.sqrt(2.0)
CHUNK = 4096
ML_TUPLE_GUARD = 10 ** 8
_HYP_CHUNK = 256

_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)


def gray_code(k: int) -> int:
    return k ^ (k >> 1)


def bit_labels(c: Constellation) -> np.ndarray:
    """Per-point bit labels (Gray coded), aligned with c.points.

    Square QAM gets the standard per-axis Gray map.  Everything else
    is Gray coded along the (radius, angle) point ordering, which is
    the natural tour for PSK and ring-based APSK.
    """
    m = len(c)
    nbits = m.bit_length() - 1
    if (1 << nbits) != m:
        raise ValueError(f"bit mapping needs a power-of-two size, got {m}")
    pts = c.points
    side = int(round(math.sqrt(m)))
    if c.name.startswith("qam") and side * side == m:
        half = nbits // 2
        xlev = np.unique(np.round(pts.real, 9))
        ylev = np.unique(np.round(pts.imag, 9))
        kx = np.searchsorted(xlev, np.round(pts.real, 9))
        ky = np.searchsorted(ylev, np.round(pts.imag, 9))
        gx = np.array([gray_code(int(k)) for k in kx], dtype=np.int64)
        gy = np.array([gray_code(int(k)) for k in ky], dtype=np.int64)
        return (gx << half) | gy
    r2 = np.round(np.abs(pts), 9)
    ang = np.round(np.mod(np.angle(pts), 2.0 * np.pi), 9)
    order = np.lexsort((ang, r2))
    labels = np.empty(m, dtype=np.int64)
    labels[order] = [gray_code(k) for k in range(m)]
    return labels


@dataclass(frozen=True)
class SimConfig:
    constellation: Constellation
    r: DesignCoefficient
    decoder: str
    snr_grid_db: tuple
    codewords_per_point: int
    seed: int

    def __post_init__(self):
        if self.decoder not in ("ml", "fast"):
            raise ValueError(f"unknown decoder {self.decoder!r}")
        if self.codewords_per_point < 1:
            raise ValueError("codewords_per_point must be >= 1")
        grid = tuple(float(s) for s in self.snr_grid_db)
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("snr grid must be strictly increasing")
        object.__setattr__(self, "snr_grid_db", grid)


@dataclass(frozen=True)
class SimPoint:
    snr_db: float
    codewords: int
    bits: int
    bit_errors: int

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits


@dataclass(frozen=True)
class SimResult:
    constellation: str
    normalization: str
    decoder: str
    seed: int
    points: tuple
    wall_clock: float


def noise_variance(snr_db: float) -> float:
    """N0 for a given SNR in dB under the SNR = 2/N0 convention."""
    return 2.0 / (10.0 ** (snr_db / 10.0))


def transmit(x: np.ndarray, h: np.ndarray, n0: float, rng) -> np.ndarray:
    """One noisy reception: Y[t, j] = sum_i h[i, j] x[i, t] + CN(0, n0)."""
    if n0 < 0:
        raise ValueError("n0 must be >= 0")
    w = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    return x.T @ h + math.sqrt(n0 / 2.0) * w


def _codewords_for(idx: np.ndarray, pts: np.ndarray, r: complex) -> np.ndarray:
    """Stack codewords for index rows idx (n, 4) -> (n, 2, 2)."""
    s1, s2, s3, s4 = (pts[idx[:, k]] for k in range(4))
    x = np.empty((idx.shape[0], 2, 2), dtype=np.complex128)
    x[:, 0, 0] = s1 + r * s3
    x[:, 0, 1] = 1j * np.conj(r) * np.conj(s2) - np.conj(s4)
    x[:, 1, 0] = s2 + r * s4
    x[:, 1, 1] = -1j * np.conj(r) * np.conj(s1) + np.conj(s3)
    return x


def _ml_decode_batch(y: np.ndarray, h: np.ndarray, r: complex,
                     pts: np.ndarray) -> np.ndarray:
    """Exhaustive ML over all tuples for a batch: (n, 2, 2) -> (n, 4).

    Hypotheses are scanned in lexicographic index order and ties keep
    the first minimum, so the tie-break is lexicographic by
    constellation index.
    """
    m = pts.size
    total = m ** 4
    if total > ML_TUPLE_GUARD:
        raise ValueError(f"{m}^4 = {total} exceeds the exhaustive-ML guard")
    n = y.shape[0]
    best = np.full(n, np.inf)
    best_idx = np.zeros((n, 4), dtype=np.int64)
    for lo in range(0, total, _HYP_CHUNK):
        hi = min(lo + _HYP_CHUNK, total)
        codes = np.arange(lo, hi, dtype=np.int64)
        idx = np.empty((hi - lo, 4), dtype=np.int64)
        idx[:, 3] = codes % m
        idx[:, 2] = (codes // m) % m
        idx[:, 1] = (codes // (m * m)) % m
        idx[:, 0] = codes // (m * m * m)
        x = _codewords_for(idx, pts, r)
        rec = np.einsum("kit,nij->kntj", x, h)
        diff = y[None, :, :, :] - rec
        metric = np.abs(diff).reshape(hi - lo, n, 4)
        metric = (metric * metric).sum(axis=2)
        kbest = metric.argmin(axis=0)
        mbest = metric[kbest, np.arange(n)]
        upd = mbest < best
        best[upd] = mbest[upd]
        best_idx[upd] = idx[kbest[upd]]
    return best_idx


def _equivalent_columns(h: np.ndarray, r: complex):
    """Orthogonal (s1, s2) channel columns for batch h (n, 2, 2).

    After conditioning on (s3, s4) and conjugating the second-time
    observations, the residual obeys w = g1*s1 + g2*s2 + noise with
    g1 . conj(g2) = 0 and |g1|^2 = |g2|^2 = ||h||_F^2.
    """
    jr = 1j * r
    g1 = np.stack([h[:, 0, 0], h[:, 0, 1],
                   jr * np.conj(h[:, 1, 0]), jr * np.conj(h[:, 1, 1])],
                  axis=1)
    g2 = np.stack([h[:, 1, 0], h[:, 1, 1],
                   -jr * np.conj(h[:, 0, 0]), -jr * np.conj(h[:, 0, 1])],
                  axis=1)
    return g1, g2


def equivalent_channel(h: np.ndarray, r: complex):
    """Single-channel version of the decoupled (s1, s2) columns."""
    g1, g2 = _equivalent_columns(np.asarray(h)[None, :, :], r)
    return g1[0], g2[0]


def _nearest_point(vals: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Indices of the closest constellation point, full scan."""
    d = np.abs(vals[:, None] - pts[None, :])
    return d.argmin(axis=1)


def _fast_decode_batch(y: np.ndarray, h: np.ndarray, r: complex,
                       pts: np.ndarray):
    """Exact ML via (s3, s4) conditioning for a batch: -> (n, 4) indices.

    The hypothesis loop runs in lexicographic (k3, k4) order with a
    strict-< running minimum, so among exact metric ties the smallest
    (k3, k4) wins.
    """
    m = pts.size
    n = y.shape[0]
    g1, g2 = _equivalent_columns(h, r)
    hnorm = (np.abs(h) ** 2).reshape(n, 4).sum(axis=1)
    best = np.full(n, np.inf)
    out = np.zeros((n, 4), dtype=np.int64)
    w = np.empty((n, 4), dtype=np.complex128)
    for k3 in range(m):
        s3 = pts[k3]
        for k4 in range(m):
            s4 = pts[k4]
            # cancel X_B = [[r*s3, -conj(s4)], [r*s4, conj(s3)]]
            b00 = r * s3
            b10 = r * s4
            b01 = -np.conj(s4)
            b11 = np.conj(s3)
            w[:, 0] = y[:, 0, 0] - (b00 * h[:, 0, 0] + b10 * h[:, 1, 0])
            w[:, 1] = y[:, 0, 1] - (b00 * h[:, 0, 1] + b10 * h[:, 1, 1])
            w[:, 2] = np.conj(
                y[:, 1, 0] - (b01 * h[:, 0, 0] + b11 * h[:, 1, 0]))
            w[:, 3] = np.conj(
                y[:, 1, 1] - (b01 * h[:, 0, 1] + b11 * h[:, 1, 1]))
            p1 = (np.conj(g1) * w).sum(axis=1) / hnorm
            p2 = (np.conj(g2) * w).sum(axis=1) / hnorm
            k1 = _nearest_point(p1, pts)
            k2 = _nearest_point(p2, pts)
            res = w - g1 * pts[k1][:, None] - g2 * pts[k2][:, None]
            metric = (np.abs(res) ** 2).sum(axis=1)
            upd = metric < best
            if upd.any():
                best[upd] = metric[upd]
                out[upd, 0] = k1[upd]
                out[upd, 1] = k2[upd]
                out[upd, 2] = k3
                out[upd, 3] = k4
    return out


def ml_decode_exhaustive(y, h, r: DesignCoefficient, c: Constellation):
    """Brute-force ML decision (s1, s2, s3, s4) for one reception."""
    idx = _ml_decode_batch(np.asarray(y)[None], np.asarray(h)[None],
                           r.r, c.points)[0]
    return tuple(c.points[k] for k in idx)


def fast_decode(y, h, r: DesignCoefficient, c: Constellation):
    """Conditional exact-ML decision for one reception."""
    idx = _fast_decode_batch(np.asarray(y)[None], np.asarray(h)[None],
                             r.r, c.points)[0]
    return tuple(c.points[k] for k in idx)


def _chunk_counts(total: int):
    sizes = [CHUNK] * (total // CHUNK)
    if total % CHUNK:
        sizes.append(total % CHUNK)
    return sizes


def _run_chunk(args):
    (pts, rval, decoder, n0, seed, point_idx, chunk_idx, n,
     labels, zero_noise) = args
    rng = np.random.default_rng([seed, point_idx, chunk_idx])
    m = pts.size
    tx = rng.integers(0, m, size=(n, 4))
    h = (rng.normal(size=(n, 2, 2)) + 1j * rng.normal(size=(n, 2, 2)))
    h *= math.sqrt(0.5)
    w = rng.normal(size=(n, 2, 2)) + 1j * rng.normal(size=(n, 2, 2))
    if zero_noise:
        w *= 0.0
    x = _codewords_for(tx, pts, rval)
    heff = TX_SCALE * h
    y = np.einsum("nit,nij->ntj", x, heff) + math.sqrt(n0 / 2.0) * w
    if decoder == "fast":
        rx = _fast_decode_batch(y, heff, rval, pts)
    else:
        rx = _ml_decode_batch(y, heff, rval, pts)
    xor = labels[tx] ^ labels[rx]
    return int(_POPCOUNT[xor].sum())


def run_ber(cfg: SimConfig, workers=None, zero_noise: bool = False) -> SimResult:
    """BER over the SNR grid; bit-exact for fixed (cfg, seed).

    Every chunk derives its random stream from (seed, point index,
    chunk index), so the outcome does not depend on scheduling or on
    the worker count.  workers=None or <= 1 runs serially.
    """
    c = cfg.constellation
    m = len(c)
    if cfg.decoder == "ml" and m ** 4 > ML_TUPLE_GUARD:
        raise ValueError(f"{m}^4 exceeds the exhaustive-ML guard")
    labels = bit_labels(c)
    nbits = m.bit_length() - 1
    t0 = time.perf_counter()
    tasks = []
    for pi, snr in enumerate(cfg.snr_grid_db):
        n0 = noise_variance(snr)
        for ci, n in enumerate(_chunk_counts(cfg.codewords_per_point)):
            tasks.append((c.points, cfg.r.r, cfg.decoder, n0, cfg.seed,
                          pi, ci, n, labels, zero_noise))
    if workers is not None and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            errs = list(pool.map(_run_chunk, tasks, chunksize=4))
    else:
        errs = [_run_chunk(t) for t in tasks]
    per_point = {}
    for task, e in zip(tasks, errs):
        per_point[task[5]] = per_point.get(task[5], 0) + e
    points = tuple(
        SimPoint(snr_db=snr, codewords=cfg.codewords_per_point,
                 bits=cfg.codewords_per_point * 4 * nbits,
                 bit_errors=per_point[pi])
        for pi, snr in enumerate(cfg.snr_grid_db))
    return SimResult(constellation=c.name, normalization=c.normalization,
                     decoder=cfg.decoder, seed=cfg.seed, points=points,
                     wall_clock=time.perf_counter() - t0)


def diversity_slope(res: SimResult, window) -> float:
    """Diversity-order estimate over window = (lo_db, hi_db).

    Least-squares slope of log10(BER) against SNR_dB/10, negated so a
    faster BER decay gives a larger value.  Needs at least two window
    points with errors.
    """
    lo, hi = window
    xs, ys = [], []
    for p in res.points:
        if lo <= p.snr_db <= hi and p.bit_errors > 0:
            xs.append(p.snr_db / 10.0)
            ys.append(math.log10(p.ber))
    if len(xs) < 2:
        raise ValueError("need >= 2 points with errors in the window")
    slope = np.polyfit(np.array(xs), np.array(ys), 1)[0]
    return float(-slope)
