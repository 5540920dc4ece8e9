import pytest

from nqdot.errors import UnknownNuclide
from nqdot.nuclides import (
    CrystalComposition,
    NuclideTable,
    ScatteringEntry,
    atomic_number,
    default_table,
)


def test_lookup_polarized_hydrogen(table):
    entry = table.lookup_entry("H", 1, polarized=True)
    assert entry.re_b_fm == -18.33
    assert entry.im_b_fm > 0  # stored as a magnitude


def test_lookup_li7_unpolarized(table):
    assert table.lookup_entry("Li", 7).re_b_fm == -2.22


def test_lookup_natural_composite_when_isotope_omitted(table):
    nat = table.lookup_entry("Li")
    assert nat.isotope is None
    assert nat.re_b_fm != table.lookup_entry("Li", 7).re_b_fm


def test_lookup_unknown_nuclide(table):
    with pytest.raises(UnknownNuclide):
        table.lookup_entry("Xx")
    with pytest.raises(UnknownNuclide):
        table.lookup_entry("H", 4)


def test_duplicate_rows_rejected():
    row = ScatteringEntry("H", 1, -3.74, 1e-4)
    with pytest.raises(Exception):
        NuclideTable([row, row])


def test_composition_sums_lih_formula_unit(table):
    fu = CrystalComposition.make(
        "LiH-fu", [("Li", 7, False, 1), ("H", 1, True, 1)], 17.02
    )
    sum_re, sum_im = table.composition_sums(fu)
    assert sum_re == pytest.approx(-20.55, abs=1e-12)
    assert sum_im > 0


def test_composition_sums_mgh2_formula_unit(table):
    # hand sum: 5.375 - 2 * 18.33 = -31.285
    fu = CrystalComposition.make(
        "MgH2-fu", [("Mg", None, False, 1), ("H", 1, True, 2)], 30.49
    )
    sum_re, _ = table.composition_sums(fu)
    assert sum_re == pytest.approx(-31.285, abs=1e-10)


def test_composition_sums_empty():
    comp = CrystalComposition("empty", (), 10.0)
    assert default_table().composition_sums(comp) == (0.0, 0.0)


def test_sums_linear_in_counts(table):
    base = CrystalComposition.make(
        "base", [("Li", 7, False, 2), ("H", 1, True, 3), ("Mg", None, False, 1)], 50.0
    )
    doubled = CrystalComposition.make(
        "x2", [("Li", 7, False, 4), ("H", 1, True, 6), ("Mg", None, False, 2)], 50.0
    )
    re1, im1 = table.composition_sums(base)
    re2, im2 = table.composition_sums(doubled)
    assert re2 == 2.0 * re1 and im2 == 2.0 * im1


def test_sum_re_strictly_decreasing_in_hydrogen_count(table):
    prev = None
    for n_h in range(1, 6):
        comp = CrystalComposition.make(
            "MgHx", [("Mg", None, False, 2), ("H", 1, True, n_h)], 60.0
        )
        sum_re, _ = table.composition_sums(comp)
        if prev is not None:
            assert sum_re < prev
        prev = sum_re


def test_composition_validation():
    with pytest.raises(ValueError):
        CrystalComposition.make("bad", [("H", 1, True, 1)], 0.0)
    with pytest.raises(ValueError):
        CrystalComposition.make("bad", [("H", 1, True, 0)], 10.0)


def test_atomic_numbers():
    assert atomic_number("H") == 1
    assert atomic_number("La") == 57
    assert atomic_number("U") == 92
    with pytest.raises(UnknownNuclide):
        atomic_number("Xx")
