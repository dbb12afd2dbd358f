import math
from fractions import Fraction

import numpy as np
import pytest

from fdstbc import codes
from fdstbc import constellations as cs
from fdstbc import gain
from fdstbc.optimizer import analytic_integer_optimum, optimize

UNIT = cs.NORM_UNIT_POWER
MIND = cs.NORM_MIN_DIST

R_GRID = analytic_integer_optimum()[0]

# closed-form optimum for unit-power 8-PSK
T8 = (11.0 + 6.0 * math.sqrt(2.0)) / 49.0
U8 = (11.0 + 6.0 * math.sqrt(2.0)
      + math.sqrt(4609.0 - 132.0 * math.sqrt(2.0))) / 98.0
G8 = (22572.0 - 15912.0 * math.sqrt(2.0)) / 2401.0
R8 = codes.DesignCoefficient(u=U8, v=U8 - T8, provenance="closed-form")


def test_pair_triples_tiny_set():
    d = cs.DifferenceSet(values=np.array([0.0, 1.0, -1.0], dtype=complex))
    trips = gain.pair_triples(d)
    got = {(t.a, t.b, complex(t.c)) for t in trips}
    want = {(0.0, 0.0, 0j), (0.0, 1.0, 0j), (1.0, 0.0, 0j),
            (1.0, 1.0, 1 + 0j), (1.0, 1.0, -1 + 0j)}
    assert got == want


@pytest.mark.parametrize("ident,norm,expected", [
    ("qam4", MIND, Fraction(1, 2)),
    ("qam4", UNIT, Fraction(2)),
    ("qam16", UNIT, Fraction(2, 25)),
    ("qam64", UNIT, Fraction(2, 441)),
    ("qam64", MIND, Fraction(1, 2)),
    ("psk4", UNIT, Fraction(2)),
    ("apsk8-grid", UNIT, Fraction(2, 9)),
    ("apsk8-grid", MIND, Fraction(1, 2)),
    ("apsk16-grid", UNIT, Fraction(1, 32)),
    ("apsk16-grid", MIND, Fraction(1, 2)),
])
def test_frozen_gains_aggregated_exact(ident, norm, expected):
    c = cs.constellation_by_id(ident, norm)
    rep = gain.coding_gain(c, R_GRID, method="aggregated")
    assert rep.gain_exact == expected
    assert math.isclose(rep.gain, float(expected), rel_tol=1e-12)


@pytest.mark.parametrize("ident,norm,expected", [
    ("qam4", MIND, 0.5),
    ("qam4", UNIT, 2.0),
    ("qam16", UNIT, 0.08),
    ("psk4", UNIT, 2.0),
    ("apsk8-grid", UNIT, 2.0 / 9.0),
])
def test_frozen_gains_exhaustive_float(ident, norm, expected):
    c = cs.constellation_by_id(ident, norm)
    rep = gain.coding_gain(c, R_GRID, method="exhaustive")
    assert abs(rep.gain - expected) < 1e-12


def test_psk8_gain_closed_form_both_methods():
    c = cs.make_psk(8, UNIT)
    agg = gain.coding_gain(c, R8, method="aggregated")
    exh = gain.coding_gain(c, R8, method="exhaustive")
    assert abs(agg.gain - G8) < 1e-12
    assert abs(exh.gain - G8) < 1e-12
    assert abs(agg.gain - exh.gain) < 1e-14


def test_methods_agree_for_random_coefficients():
    rng = np.random.default_rng(23)
    for ident, norm in (("qam4", UNIT), ("psk8", UNIT), ("apsk8", MIND)):
        c = cs.constellation_by_id(ident, norm)
        for _ in range(5):
            ang = rng.uniform(0, 2 * math.pi)
            r = codes.DesignCoefficient(u=math.cos(ang), v=math.sin(ang))
            agg = gain.coding_gain(c, r, method="aggregated")
            exh = gain.coding_gain(c, r, method="exhaustive")
            assert math.isclose(agg.gain, exh.gain,
                                rel_tol=1e-12, abs_tol=1e-13)


def test_argmin_reproduces_reported_gain():
    for ident, norm, r in (("qam4", MIND, R_GRID), ("psk8", UNIT, R8),
                           ("qam16", UNIT, R_GRID)):
        c = cs.constellation_by_id(ident, norm)
        rep = gain.coding_gain(c, r)
        det = codes.det_direct(rep.argmin, r)
        assert math.isclose(abs(det) ** 2, rep.gain,
                            rel_tol=1e-9, abs_tol=1e-12)
        assert rep.argmin.case == rep.case_of_argmin


def test_case2_floor_on_qam_grids():
    for ident in ("qam4", "qam16"):
        c = cs.constellation_by_id(ident, cs.NORM_INTEGER)
        rep = gain.coding_gain(c, R_GRID, method="aggregated")
        assert rep.case2_min >= 7.0 / 8.0 - 1e-12
        assert rep.case2_bound_min >= 7.0 / 8.0 - 1e-12


def test_degenerate_coefficient_kills_gain():
    r = codes.DesignCoefficient(u=1 / math.sqrt(2), v=1 / math.sqrt(2))
    c = cs.make_qam(4, UNIT)
    assert gain.coding_gain(c, r).gain == 0.0


def test_exhaustive_guard_on_large_sets():
    c = cs.make_psk(32, UNIT)
    with pytest.raises(ValueError):
        gain.coding_gain(c, R8, method="exhaustive")


def test_golden_gains_match_brute_force():
    c4 = cs.make_qam(4, UNIT)
    g4 = gain.golden_coding_gain(c4)
    assert abs(g4 - 3.2) < 1e-6
    g16 = gain.golden_coding_gain(cs.make_qam(16, UNIT))
    assert abs(g16 - 0.128) < 1e-6
    # brute force over the full difference-tuple space for 4-QAM
    d = cs.difference_set(c4).values
    best = math.inf
    for a in d:
        for b in d:
            for c in d:
                for e in d:
                    if a == 0 and b == 0 and c == 0 and e == 0:
                        continue
                    x = codes.build_codeword_golden(a, b, c, e)
                    det = x[0, 0] * x[1, 1] - x[0, 1] * x[1, 0]
                    best = min(best, abs(det) ** 2)
    assert math.isclose(g4, best, rel_tol=1e-9)


def test_scaling_law_fourth_power():
    rng = np.random.default_rng(31)
    for ident in ("qam4", "apsk8-grid"):
        c = cs.constellation_by_id(ident, UNIT)
        base = gain.coding_gain(c, R_GRID).gain
        for _ in range(3):
            alpha = rng.uniform(0.3, 3.0)
            scaled = gain.coding_gain_scaled(c, R_GRID, alpha)
            assert math.isclose(scaled.gain, alpha ** 4 * base,
                                rel_tol=1e-9)


def test_vanishing_probe_psk_shrinks_qam_does_not():
    psk = dict(gain.vanishing_probe("psk"))
    assert psk[4] > psk[8]
    qam = dict(gain.vanishing_probe("qam"))
    for m in (4, 16, 64):
        assert abs(qam[m] - 0.5) < 1e-12


def test_gain_report_fields_consistent():
    c = cs.constellation_by_id("qam16", MIND)
    rep = gain.coding_gain(c, R_GRID, method="aggregated")
    assert rep.gain == min(rep.case1_min, rep.case2_min)
    assert rep.method == "aggregated"
    assert rep.case2_min >= rep.case2_bound_min - 1e-12
