"""Regenerate src/nqdot/data/nuclide_table.csv.

Inputs are bound coherent scattering lengths Re[b] (fm) and thermal
(2200 m/s) absorption cross-sections sigma_a (barn) from the standard
tabulation.  The stored Im[b] is derived once here via
Im[b] = sigma_a * k0 / 4pi and the cross-section itself is not shipped.

The polarized 1H row is the spin-antiparallel value; its absorption
channel reuses the unpolarized sigma_a (polarization reshuffles the
coherent amplitude, not the capture channel used here).

Run from the repository root:  python tools/make_nuclide_table.py
"""

import pathlib
import sys

sys.path.insert(0, "src")
from nqdot.constants import IM_B_PER_BARN

# symbol, isotope (None = natural), abundance, Re[b] fm, sigma_a barn,
# polarized, radioactive
ROWS = [
    ("H", None, 1.0, -3.7390, 0.3326, False, False),
    ("H", 1, 0.99985, -3.7406, 0.3326, False, False),
    ("H", 1, 0.99985, -18.33, 0.3326, True, False),
    ("H", 2, 0.000115, 6.671, 0.000519, False, False),
    ("Li", None, 1.0, -1.90, 70.5, False, False),
    ("Li", 6, 0.0759, 2.00, 940.0, False, False),
    ("Li", 7, 0.9241, -2.22, 0.0454, False, False),
    ("Be", 9, 1.0, 7.79, 0.0076, False, False),
    ("B", None, 1.0, 5.30, 767.0, False, False),
    ("B", 10, 0.199, -0.1, 3835.0, False, False),
    ("B", 11, 0.801, 6.65, 0.0055, False, False),
    ("C", None, 1.0, 6.6460, 0.00350, False, False),
    ("N", None, 1.0, 9.36, 1.90, False, False),
    ("O", None, 1.0, 5.803, 0.00019, False, False),
    ("F", 19, 1.0, 5.654, 0.0096, False, False),
    ("Na", 23, 1.0, 3.63, 0.530, False, False),
    ("Mg", None, 1.0, 5.375, 0.063, False, False),
    ("Al", 27, 1.0, 3.449, 0.231, False, False),
    ("Si", None, 1.0, 4.1491, 0.171, False, False),
    ("Cl", None, 1.0, 9.5770, 33.5, False, False),
    ("Cl", 35, 0.7576, 11.65, 44.1, False, False),
    ("Cl", 37, 0.2424, 3.08, 0.433, False, False),
    ("K", None, 1.0, 3.67, 2.1, False, False),
    ("Ca", None, 1.0, 4.70, 0.43, False, False),
    ("Ti", None, 1.0, -3.438, 6.09, False, False),
    ("V", 51, 1.0, -0.3824, 5.08, False, False),
    ("Fe", None, 1.0, 9.45, 2.56, False, False),
    ("Ni", None, 1.0, 10.3, 4.49, False, False),
    ("Cu", None, 1.0, 7.718, 3.78, False, False),
    ("Zn", None, 1.0, 5.680, 1.11, False, False),
    ("Se", None, 1.0, 7.970, 11.7, False, False),
    ("Se", 80, 0.4961, 7.48, 0.61, False, False),
    ("Zr", None, 1.0, 7.16, 0.185, False, False),
    ("Nb", 93, 1.0, 7.054, 1.15, False, False),
    ("Tc", 99, 1.0, 6.8, 20.0, False, True),
    ("Pd", None, 1.0, 5.91, 6.9, False, False),
    ("Pm", 147, 1.0, 12.6, 168.4, False, True),
    ("La", None, 1.0, 8.24, 8.97, False, False),
    ("Ce", None, 1.0, 4.84, 0.63, False, False),
]


def main():
    lines = [
        "# Bound coherent scattering lengths (fm) and absorption-derived Im[b] (fm).",
        "# Im[b] = sigma_a(2200 m/s) * k0 / 4pi, stored as a magnitude.",
        "symbol,isotope,abundance,re_b_fm,im_b_fm,polarized,radioactive",
    ]
    for sym, iso, ab, re_b, sig_a, pol, radio in ROWS:
        im_b = sig_a * IM_B_PER_BARN
        lines.append(
            f"{sym},{iso if iso is not None else ''},{ab},{re_b},{im_b:.6e},"
            f"{'true' if pol else 'false'},{'true' if radio else 'false'}"
        )
    out = pathlib.Path("src/nqdot/data/nuclide_table.csv")
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out} ({len(ROWS)} rows)")


if __name__ == "__main__":
    main()
