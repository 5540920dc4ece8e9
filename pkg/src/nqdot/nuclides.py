"""Nuclide scattering-length table and per-unit-cell coherent sums.

The shipped table stores bound coherent scattering lengths Re[b] (fm) and
absorption-derived Im[b] (fm) per nuclide.  Im[b] is pre-derived from the
thermal (2200 m/s) absorption cross-section via Im[b] = sigma_a * k0 / 4pi
and stored as a magnitude, so downstream code never touches cross-sections.
Natural-abundance composites are precomputed rows, not runtime mixtures.

The polarized flag marks spin-polarized values; in the shipped table only
1H carries a polarized row (neutron and proton spins anti-aligned).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import AmbiguousKey, UnknownNuclide

DATA_DIR = Path(__file__).parent / "data"
DEFAULT_TABLE = DATA_DIR / "nuclide_table.csv"

REQUIRED_COLUMNS = {"symbol", "isotope", "abundance", "re_b_fm", "im_b_fm", "polarized"}

# Element symbols in proton-number order; index+1 = Z.
ELEMENT_SYMBOLS = (
    "H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni "
    "Cu Zn Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I "
    "Xe Cs Ba La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt "
    "Au Hg Tl Pb Bi Po At Rn Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr"
).split()

ATOMIC_NUMBER = {sym: z + 1 for z, sym in enumerate(ELEMENT_SYMBOLS)}


def atomic_number(symbol: str) -> int:
    try:
        return ATOMIC_NUMBER[symbol]
    except KeyError:
        raise UnknownNuclide(f"unknown element symbol {symbol!r}") from None


@dataclass(frozen=True)
class ScatteringEntry:
    """One nuclide row: complex bound scattering length and bookkeeping.

    im_b_fm is stored as a magnitude (>= 0); the derived absorption
    cross-section is then non-negative by construction.
    """

    symbol: str
    isotope: Optional[int]  # None = natural-abundance composite
    re_b_fm: float
    im_b_fm: float
    polarized: bool = False
    abundance: float = 1.0
    radioactive: bool = False

    def __post_init__(self):
        if self.im_b_fm < 0:
            raise ValueError("im_b_fm is a magnitude; got a negative value")
        if not 0.0 <= self.abundance <= 1.0:
            raise ValueError("abundance must lie in [0, 1]")

    @property
    def key(self) -> tuple:
        return (self.symbol, self.isotope, self.polarized)


@dataclass(frozen=True)
class CrystalComposition:
    """Unit-cell contents: (nuclide key, count) pairs plus the cell volume.

    species entries are ((symbol, isotope, polarized), count) with count the
    number of that nuclide per unit cell.
    """

    name: str
    species: tuple  # ((symbol, isotope|None, polarized), count) pairs
    cell_volume_A3: float
    mass_density_kg_m3: Optional[float] = None

    def __post_init__(self):
        if self.cell_volume_A3 <= 0:
            raise ValueError(f"{self.name}: cell_volume_A3 must be > 0")
        for key, count in self.species:
            if count < 1:
                raise ValueError(f"{self.name}: count for {key} must be >= 1")

    @staticmethod
    def make(name, species, cell_volume_A3, mass_density_kg_m3=None):
        """Build from a list of (symbol, isotope, polarized, count) tuples."""
        spec = tuple(((s, i, bool(p)), int(n)) for s, i, p, n in species)
        return CrystalComposition(name, spec, cell_volume_A3, mass_density_kg_m3)


class NuclideTable:
    """Immutable lookup table; safe for concurrent reads once loaded."""

    def __init__(self, entries):
        self._entries = tuple(entries)
        seen = {}
        for e in self._entries:
            if e.key in seen:
                raise AmbiguousKey(f"duplicate table row for {e.key}")
            seen[e.key] = e
        self._by_key = seen

    @classmethod
    def load(cls, path=DEFAULT_TABLE) -> "NuclideTable":
        path = Path(path)
        entries = []
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(row for row in fh if not row.startswith("#"))
            if reader.fieldnames is None or not REQUIRED_COLUMNS.issubset(
                reader.fieldnames
            ):
                missing = REQUIRED_COLUMNS - set(reader.fieldnames or ())
                raise ValueError(f"nuclide table {path}: missing columns {missing}")
            for row in reader:
                iso = row["isotope"].strip()
                entries.append(
                    ScatteringEntry(
                        symbol=row["symbol"].strip(),
                        isotope=int(iso) if iso else None,
                        re_b_fm=float(row["re_b_fm"]),
                        im_b_fm=float(row["im_b_fm"]),
                        polarized=row["polarized"].strip().lower()
                        in ("1", "true", "yes"),
                        abundance=float(row["abundance"]),
                        radioactive=row.get("radioactive", "").strip().lower()
                        in ("1", "true", "yes"),
                    )
                )
        return cls(entries)

    def lookup_entry(
        self, symbol: str, isotope: Optional[int] = None, polarized: bool = False
    ) -> ScatteringEntry:
        """Return the unique entry for (symbol, isotope, polarized).

        isotope=None selects the natural-abundance composite row.
        """
        key = (symbol, isotope, bool(polarized))
        try:
            return self._by_key[key]
        except KeyError:
            iso = isotope if isotope is not None else "natural"
            pol = "polarized" if polarized else "unpolarized"
            raise UnknownNuclide(f"no table row for {symbol} ({iso}, {pol})") from None

    def composition_sums(self, comp: CrystalComposition) -> tuple:
        """Per-unit-cell coherent sums (sum n*Re[b], sum n*Im[b]) in fm."""
        sum_re = 0.0
        sum_im = 0.0
        for (symbol, isotope, polarized), count in comp.species:
            entry = self.lookup_entry(symbol, isotope, polarized)
            sum_re += count * entry.re_b_fm
            sum_im += count * entry.im_b_fm
        return sum_re, sum_im

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)


_default_table: Optional[NuclideTable] = None


def default_table() -> NuclideTable:
    global _default_table
    if _default_table is None:
        _default_table = NuclideTable.load()
    return _default_table
