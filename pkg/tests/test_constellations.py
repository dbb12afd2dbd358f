import math

import numpy as np
import pytest

from fdstbc import constellations as cs

UNIT = cs.NORM_UNIT_POWER
MIND = cs.NORM_MIN_DIST
GRID = cs.NORM_INTEGER


def test_qam4_unit_power_layout():
    c = cs.make_qam(4, UNIT)
    want = {(round(s * 0.5 ** 0.5, 12), round(t * 0.5 ** 0.5, 12))
            for s in (-1, 1) for t in (-1, 1)}
    got = {(round(p.real, 12), round(p.imag, 12)) for p in c.points}
    assert got == want
    assert math.isclose(cs.min_distance(c), math.sqrt(2.0), rel_tol=1e-12)


def test_qam16_unit_power_min_distance():
    c = cs.make_qam(16, UNIT)
    assert math.isclose(cs.min_distance(c), 2.0 / math.sqrt(10.0),
                        rel_tol=1e-12)
    assert math.isclose(cs.avg_power(c), 1.0, rel_tol=1e-12)


def test_qam16_min_dist_difference_set():
    c = cs.make_qam(16, MIND)
    assert math.isclose(cs.min_distance(c), 1.0, rel_tol=1e-12)
    d = cs.difference_set(c)
    assert len(d) == 49
    re = np.round(d.values.real, 9)
    im = np.round(d.values.imag, 9)
    assert np.array_equal(re, np.round(re))
    assert re.min() == -3 and re.max() == 3
    assert im.min() == -3 and im.max() == 3


def test_qam_rejects_unsupported_sizes():
    for m in (2, 8, 32):
        with pytest.raises(ValueError):
            cs.make_qam(m)


def test_psk8_unit_power():
    c = cs.make_psk(8, UNIT)
    assert np.allclose(np.abs(c.points), 1.0)
    assert math.isclose(cs.min_distance(c), 2.0 * math.sin(math.pi / 8),
                        rel_tol=1e-12)
    assert math.isclose(cs.papr(c), 1.0, rel_tol=1e-12)


def test_psk4_is_rotated_qam4():
    q = cs.make_qam(4, UNIT)
    p = cs.make_psk(4, UNIT)
    rotated = np.sort_complex(p.points * np.exp(1j * math.pi / 4))
    assert np.allclose(np.sort_complex(q.points), rotated, atol=1e-12)


def test_psk8_min_dist_radius():
    c = cs.make_psk(8, MIND)
    assert np.allclose(np.abs(c.points), 1.0 / (2.0 * math.sin(math.pi / 8)))


def test_psk_rejects_tiny_m_and_non_grid_integer():
    with pytest.raises(ValueError):
        cs.make_psk(1)
    with pytest.raises(ValueError):
        cs.make_psk(8, GRID)


def test_apsk8_conventional_layout():
    c = cs.make_apsk8_conventional(UNIT)
    b = 1.0 / math.sqrt(3.0 + math.sqrt(3.0))
    assert abs(cs.min_distance(c) - 0.9194) < 1e-3
    assert math.isclose(cs.min_distance(c), 2.0 * b, rel_tol=1e-12)
    assert math.isclose(cs.avg_power(c), 1.0, rel_tol=1e-12)
    inner = c.points[np.abs(np.abs(c.points) - b * math.sqrt(2)) < 1e-9]
    outer = c.points[np.abs(np.abs(c.points) - b * (1 + math.sqrt(3))) < 1e-9]
    assert inner.size == 4 and outer.size == 4
    cross = np.abs(inner[:, None] - outer[None, :]).min()
    assert math.isclose(cross, 2.0 * b, rel_tol=1e-9)


def test_apsk16_dvbs2_layout():
    c = cs.make_apsk16_dvbs2(UNIT)
    r1 = 2.0 / math.sqrt(13.0 + 6.0 * math.sqrt(3.0))
    r2 = 2.0 * math.sqrt(2.0) / math.sqrt(8.0 - math.sqrt(3.0))
    assert abs(cs.min_distance(c) - 0.5848) < 1e-3
    assert abs(cs.avg_power(c) - 1.0) < 1e-6
    assert abs((4 * r1 ** 2 + 12 * r2 ** 2) / 16.0 - 1.0) < 1e-6
    assert c.ring_radii is not None and len(c.ring_radii) == 2
    assert c.ring_radii[0] < c.ring_radii[1]
    assert math.isclose(c.ring_radii[0], r1, rel_tol=1e-12)
    assert math.isclose(c.ring_radii[1], r2, rel_tol=1e-12)


def test_apsk8_grid_preset():
    c = cs.make_apsk_grid_preset("apsk8-grid", UNIT)
    assert abs(cs.min_distance(c) - math.sqrt(2.0 / 3.0)) < 1e-12
    assert abs(cs.avg_power(c) - 1.0) < 1e-12
    assert abs(cs.papr(c) - 4.0 / 3.0) < 1e-12
    # ring radii in grid units must be sqrt(m^2 + n^2) for integers m, n
    grid_r2 = {round((abs(p) / c.grid.scale) ** 2) for p in c.points}
    assert grid_r2 == {2, 4}
    for rsq in grid_r2:
        assert any(m * m + n * n == rsq
                   for m in range(5) for n in range(5))


def test_apsk16_grid_preset():
    c = cs.make_apsk_grid_preset("apsk16-grid", UNIT)
    assert len(c) == 16
    assert abs(cs.min_distance(c) - 0.5) < 1e-12
    assert abs(cs.avg_power(c) - 1.0) < 1e-12
    assert math.isclose(c.grid.scale, 0.5, rel_tol=1e-12)


def test_apsk_grid_rejects_bad_specs():
    with pytest.raises(ValueError):
        cs.make_apsk_grid(cs.GridApskSpec(rings=()))
    dup = cs.GridApskSpec(rings=(cs.Ring(m=1, n=0, points=((1, 0), (1, 0))),))
    with pytest.raises(ValueError):
        cs.make_apsk_grid(dup)
    off = cs.GridApskSpec(rings=(cs.Ring(m=1, n=0, points=((2, 0),)),))
    with pytest.raises(ValueError):
        cs.make_apsk_grid(off)


def test_normalize_qam16_scale_factor():
    c = cs.normalize(cs.make_qam(16, MIND), UNIT)
    ref = cs.make_qam(16, UNIT)
    assert np.allclose(np.sort_complex(c.points),
                       np.sort_complex(ref.points), atol=1e-12)
    assert math.isclose(cs.min_distance(c), 2.0 / math.sqrt(10.0),
                        rel_tol=1e-12)


def test_normalize_idempotent():
    for ident in ("qam4", "qam16", "psk8", "apsk8", "apsk8-grid"):
        c = cs.constellation_by_id(ident, UNIT)
        again = cs.normalize(c, UNIT)
        assert np.array_equal(c.points, again.points)


def test_normalize_psk8_to_min_dist():
    c = cs.normalize(cs.make_psk(8, UNIT), MIND)
    assert np.allclose(np.abs(c.points), 1.0 / (2.0 * math.sin(math.pi / 8)))


def test_difference_set_invariants():
    for ident in ("qam4", "qam16", "psk8", "apsk16-grid"):
        c = cs.constellation_by_id(ident, UNIT)
        d = cs.difference_set(c).values
        assert np.any(d == 0)
        neg = np.sort_complex(-d)
        assert np.allclose(np.sort_complex(d), neg, atol=1e-12)


def test_grid_differences_are_integer_coordinates():
    for ident in ("qam4", "qam16", "qam64", "psk4", "apsk8-grid",
                  "apsk16-grid"):
        for norm in (UNIT, MIND, GRID):
            c = cs.constellation_by_id(ident, norm)
            assert c.integer_grid
            d = cs.difference_set(c).values / c.grid.scale
            assert np.abs(d.real - np.round(d.real)).max() < 1e-9
            assert np.abs(d.imag - np.round(d.imag)).max() < 1e-9


def test_grid_apsk_papr_below_qam16():
    lhs = cs.papr(cs.make_apsk_grid_preset("apsk8-grid", UNIT))
    rhs = cs.papr(cs.make_qam(16, UNIT))
    assert lhs < rhs


def test_constellation_by_id_rejects_unknown():
    with pytest.raises(ValueError):
        cs.constellation_by_id("hexagon7")
