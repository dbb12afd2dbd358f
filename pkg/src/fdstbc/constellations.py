"""Signal constellations and their difference sets.

Generators produce QAM, PSK and two flavours of APSK (ring-based and
square-grid) under one of three normalizations:

* ``integer-grid``       raw integer coordinates
* ``unit-average-power`` mean |p|^2 == 1
* ``min-dist-1``         minimum Euclidean distance == 1

Constellations that live on a scaled integer grid carry a ``GridInfo``
record so downstream coding-gain code can switch to exact integer
arithmetic.  The grid scale is the spacing of the *difference* lattice:
point differences divided by it are exactly Gaussian integers (the
points themselves may sit on a common half-step translation, as centred
QAM does).  ``GridInfo.scale_sq`` stores scale**2 as an exact Fraction
whenever the construction permits, which is what makes gains like 1/2
come out exact instead of 0.4999999999999999.
"""

from dataclasses import dataclass
from fractions import Fraction
import math

import numpy as np

NORM_INTEGER = "integer-grid"
NORM_UNIT_POWER = "unit-average-power"
NORM_MIN_DIST = "min-dist-1"
NORMALIZATIONS = (NORM_INTEGER, NORM_UNIT_POWER, NORM_MIN_DIST)

DEDUP_TOL = 1e-9


@dataclass(frozen=True)
class GridInfo:
    """Scaling metadata for constellations on an integer grid.

    scale is the difference-lattice spacing: (p - q) / scale is a
    Gaussian integer for every point pair, and points / scale are
    Gaussian integers up to one translation shared by all points
    (centred QAM sits on the half-odd grid, so twice points / scale
    is always integral).
    """

    scale: float
    scale_sq: Fraction | None = None


@dataclass(frozen=True, eq=False)
class Constellation:
    name: str
    points: np.ndarray
    normalization: str
    grid: GridInfo | None = None
    ring_radii: tuple[float, ...] | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.complex128)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("constellation needs at least 2 points")
        d = _min_pairwise_distance(pts)
        if d <= DEDUP_TOL:
            raise ValueError("constellation points are not pairwise distinct")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.size

    @property
    def integer_grid(self) -> bool:
        return self.grid is not None


@dataclass(frozen=True, eq=False)
class DifferenceSet:
    """All pairwise differences p - q of a constellation, deduplicated."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.complex128)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class Ring:
    """One ring of a grid APSK layout: radius sqrt(m^2 + n^2), integer points."""

    m: int
    n: int
    points: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class GridApskSpec:
    rings: tuple[Ring, ...]


# Square-grid APSK presets.  8 points on radii {sqrt(2), 2}, 16 points on
# radii {1, sqrt(2), 2, 3}; both have minimum grid distance matching their
# inner structure and give coding gain 1/2 once rescaled to min-dist-1.
GRID_APSK_8 = GridApskSpec(rings=(
    Ring(1, 1, ((1, 1), (-1, 1), (-1, -1), (1, -1))),
    Ring(2, 0, ((2, 0), (0, 2), (-2, 0), (0, -2))),
))

GRID_APSK_16 = GridApskSpec(rings=(
    Ring(1, 0, ((1, 0), (0, 1), (-1, 0), (0, -1))),
    Ring(1, 1, ((1, 1), (-1, 1), (-1, -1), (1, -1))),
    Ring(2, 0, ((2, 0), (0, 2), (-2, 0), (0, -2))),
    Ring(3, 0, ((3, 0), (0, 3), (-3, 0), (0, -3))),
))


def _min_pairwise_distance(pts: np.ndarray) -> float:
    d = np.abs(pts[:, None] - pts[None, :])
    d[np.diag_indices_from(d)] = np.inf
    return float(d.min())


def min_distance(c: Constellation) -> float:
    return _min_pairwise_distance(c.points)


def avg_power(c: Constellation) -> float:
    return float(np.mean(np.abs(c.points) ** 2))


def papr(c: Constellation) -> float:
    p = np.abs(c.points) ** 2
    return float(p.max() / p.mean())


def _dedup_complex(vals: np.ndarray, tol: float = DEDUP_TOL) -> np.ndarray:
    """Deduplicate complex values (tol grid keys), sorted by (re, im).

    Returns first-occurrence representatives at full precision; snapping
    the values themselves to the key grid would inject ~tol errors into
    everything downstream.
    """
    kr = np.round(vals.real / tol).astype(np.int64)
    ki = np.round(vals.imag / tol).astype(np.int64)
    order = np.lexsort((ki, kr))
    kr, ki = kr[order], ki[order]
    keep = np.ones(kr.size, dtype=bool)
    keep[1:] = (kr[1:] != kr[:-1]) | (ki[1:] != ki[:-1])
    return vals[order][keep]


def difference_set(c: Constellation) -> DifferenceSet:
    pts = c.points
    diffs = pts[:, None] - pts[None, :]
    vals = _dedup_complex(diffs.ravel())
    return DifferenceSet(values=vals)


def _grid_constellation(name, coords, norm, ring_radii_sq=None,
                        lattice_step=1):
    """Build a Constellation from exact integer coordinates.

    coords: complex integer array.  lattice_step: spacing of the coord
    difference lattice in coord units (2 for odd-level QAM and BPSK,
    1 otherwise); the stored grid scale refers to this lattice, not to
    the raw coords.  ring_radii_sq: optional squared radii in coord
    units (ints) for the ring metadata.
    """
    coords = np.asarray(coords, dtype=np.complex128)
    sq = (coords.real ** 2 + coords.imag ** 2).round().astype(np.int64)
    if norm == NORM_INTEGER:
        point_sq = Fraction(1)
    elif norm == NORM_UNIT_POWER:
        point_sq = Fraction(len(coords), int(sq.sum()))
    elif norm == NORM_MIN_DIST:
        d = coords[:, None] - coords[None, :]
        dsq = (d.real ** 2 + d.imag ** 2).round().astype(np.int64)
        dmin = int(dsq[dsq > 0].min())
        point_sq = Fraction(1, dmin)
    else:
        raise ValueError(f"unknown normalization {norm!r}")
    point_scale = math.sqrt(point_sq)
    scale_sq = point_sq * lattice_step ** 2
    radii = None
    if ring_radii_sq is not None:
        radii = tuple(sorted(point_scale * math.sqrt(s) for s in ring_radii_sq))
    return Constellation(
        name=name,
        points=coords * point_scale,
        normalization=norm,
        grid=GridInfo(scale=math.sqrt(scale_sq), scale_sq=scale_sq),
        ring_radii=radii,
    )


def make_qam(m: int, norm: str = NORM_UNIT_POWER) -> Constellation:
    """Square QAM on odd integer levels {+-1, +-3, ...} before scaling."""
    if m not in (4, 16, 64):
        raise ValueError("supported QAM sizes: 4, 16, 64")
    side = int(round(math.sqrt(m)))
    levels = np.arange(-(side - 1), side, 2)
    re, im = np.meshgrid(levels, levels)
    coords = (re + 1j * im).ravel()
    return _grid_constellation(f"qam{m}", coords, norm, lattice_step=2)


def make_psk(m: int, norm: str = NORM_UNIT_POWER) -> Constellation:
    """M-ary PSK, points exp(j*2*pi*k/M).  Integer grid only for M in {2, 4}."""
    if m < 2:
        raise ValueError("PSK needs M >= 2")
    name = f"psk{m}"
    if m in (2, 4):
        coords = np.exp(2j * np.pi * np.arange(m) / m).round()
        return _grid_constellation(name, coords, norm, ring_radii_sq=[1],
                                   lattice_step=2 if m == 2 else 1)
    if norm == NORM_INTEGER:
        raise ValueError(f"psk{m} does not live on an integer grid")
    pts = np.exp(2j * np.pi * np.arange(m) / m)
    if norm == NORM_MIN_DIST:
        pts = pts / (2.0 * math.sin(math.pi / m))
    radius = float(np.abs(pts[0]))
    return Constellation(name=name, points=pts, normalization=norm,
                         ring_radii=(radius,))


def make_apsk8_conventional(norm: str = NORM_UNIT_POWER) -> Constellation:
    """8-APSK with 4 points at (+-b, +-b) and 4 at radius b(1+sqrt(3)) on the axes.

    b = 1/sqrt(3 + sqrt(3)) makes the average power exactly 1; the inner-inner
    and inner-outer nearest distances are then both 2b.
    """
    if norm == NORM_INTEGER:
        raise ValueError("conventional 8-APSK does not live on an integer grid")
    b = 1.0 / math.sqrt(3.0 + math.sqrt(3.0))
    inner = b * np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j])
    outer = b * (1.0 + math.sqrt(3.0)) * np.array([1, 1j, -1, -1j])
    pts = np.concatenate([inner, outer])
    radii = [abs(inner[0]), abs(outer[0])]
    if norm == NORM_MIN_DIST:
        f = 1.0 / (2.0 * b)
        pts = pts * f
        radii = [r * f for r in radii]
    return Constellation(name="apsk8", points=pts, normalization=norm,
                         ring_radii=tuple(radii))


def make_apsk16_dvbs2(norm: str = NORM_UNIT_POWER) -> Constellation:
    """DVB-S2 style 4+12 APSK with ring ratio 1 + sqrt(3).

    r1 = 2/sqrt(13 + 6*sqrt(3)), r2 = 2*sqrt(2)/sqrt(8 - sqrt(3)); the inner
    ring sits at pi/4 + k*pi/2 and the outer at pi/12 + k*pi/6.  With these
    radii the average power is exactly 1 and the inner-chord and outer-chord
    minimum distances coincide.
    """
    if norm == NORM_INTEGER:
        raise ValueError("16-APSK does not live on an integer grid")
    r1 = 2.0 / math.sqrt(13.0 + 6.0 * math.sqrt(3.0))
    r2 = 2.0 * math.sqrt(2.0) / math.sqrt(8.0 - math.sqrt(3.0))
    inner = r1 * np.exp(1j * (np.pi / 4 + np.pi / 2 * np.arange(4)))
    outer = r2 * np.exp(1j * (np.pi / 12 + np.pi / 6 * np.arange(12)))
    pts = np.concatenate([inner, outer])
    radii = [r1, r2]
    if norm == NORM_MIN_DIST:
        f = 1.0 / _min_pairwise_distance(pts)
        pts = pts * f
        radii = [r * f for r in radii]
    return Constellation(name="apsk16", points=pts, normalization=norm,
                         ring_radii=tuple(radii))


def make_apsk_grid(spec: GridApskSpec, norm: str = NORM_UNIT_POWER,
                   name: str = "apsk-grid") -> Constellation:
    """APSK whose points are integer grid coordinates grouped into rings."""
    if not spec.rings:
        raise ValueError("empty grid APSK spec")
    coords = []
    radii_sq = []
    for ring in spec.rings:
        rsq = ring.m ** 2 + ring.n ** 2
        if rsq == 0 or not ring.points:
            raise ValueError("each ring needs a positive radius and points")
        for (x, y) in ring.points:
            if x * x + y * y != rsq:
                raise ValueError(
                    f"point ({x},{y}) is not on ring radius^2={rsq}")
            coords.append(complex(x, y))
        radii_sq.append(rsq)
    arr = np.array(coords, dtype=np.complex128)
    if _min_pairwise_distance(arr) < 1.0:
        raise ValueError("duplicate points in grid APSK spec")
    # points sorted ring by ring, by angle inside a ring
    order = np.lexsort((np.round(np.mod(np.angle(arr), 2 * np.pi), 12),
                        np.round(np.abs(arr), 12)))
    return _grid_constellation(name, arr[order], norm, ring_radii_sq=radii_sq)


_GRID_PRESETS = {
    "apsk8-grid": (GRID_APSK_8, "apsk8-grid"),
    "apsk16-grid": (GRID_APSK_16, "apsk16-grid"),
}


def make_apsk_grid_preset(which: str, norm: str = NORM_UNIT_POWER) -> Constellation:
    try:
        spec, name = _GRID_PRESETS[which]
    except KeyError:
        raise ValueError(f"unknown grid APSK preset {which!r}; "
                         f"have {sorted(_GRID_PRESETS)}") from None
    return make_apsk_grid(spec, norm, name=name)


def normalize(c: Constellation, mode: str) -> Constellation:
    """Rescale a constellation to unit average power or to min distance 1."""
    if mode == NORM_UNIT_POWER:
        target_sq = 1.0 / avg_power(c)
    elif mode == NORM_MIN_DIST:
        target_sq = 1.0 / min_distance(c) ** 2
    else:
        raise ValueError(f"cannot normalize to {mode!r}")
    factor = math.sqrt(target_sq)
    if abs(factor - 1.0) < 1e-12:
        # already there; keep points bit-identical (idempotence)
        return Constellation(name=c.name, points=c.points.copy(),
                             normalization=mode, grid=c.grid,
                             ring_radii=c.ring_radii)
    grid = None
    if c.grid is not None:
        scale_sq = None
        if c.grid.scale_sq is not None:
            # points/scale live on the half-integer grid; doubling makes
            # them exact integers so the new scaling stays a Fraction
            w2 = 2.0 * c.points / c.grid.scale
            iw = np.round(w2.real).astype(np.int64) \
                + 1j * np.round(w2.imag).astype(np.int64)
            if np.max(np.abs(w2 - iw)) > 1e-6:
                raise ValueError("grid metadata inconsistent with points")
            if mode == NORM_UNIT_POWER:
                pow_sq = c.grid.scale_sq * \
                    Fraction(int(np.round(np.abs(iw) ** 2).sum()), 4 * len(c))
                factor_sq = 1 / pow_sq
            else:
                d = iw[:, None] - iw[None, :]
                dsq = np.round(np.abs(d) ** 2).astype(np.int64)
                mind = c.grid.scale_sq * Fraction(int(dsq[dsq > 0].min()), 4)
                factor_sq = 1 / mind
            scale_sq = c.grid.scale_sq * factor_sq
            factor = math.sqrt(factor_sq)
        grid = GridInfo(scale=c.grid.scale * factor, scale_sq=scale_sq)
    radii = None
    if c.ring_radii is not None:
        radii = tuple(r * factor for r in c.ring_radii)
    return Constellation(name=c.name, points=c.points * factor,
                         normalization=mode, grid=grid, ring_radii=radii)


def constellation_by_id(ident: str, norm: str = NORM_UNIT_POWER) -> Constellation:
    """Resolve CLI-style constellation ids like qam16, psk8, apsk8-grid."""
    ident = ident.lower()
    if ident in _GRID_PRESETS:
        return make_apsk_grid_preset(ident, norm)
    if ident == "apsk8":
        return make_apsk8_conventional(norm)
    if ident == "apsk16":
        return make_apsk16_dvbs2(norm)
    if ident.startswith("qam"):
        return make_qam(int(ident[3:]), norm)
    if ident.startswith("psk"):
        return make_psk(int(ident[3:]), norm)
    raise ValueError(f"unknown constellation id {ident!r}")
