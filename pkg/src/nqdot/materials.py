"""Built-in material compositions and the composition-file format.

A composition file is JSON:

    {"name": "LiH", "cell_volume_A3": 68.09, "mass_density_kg_m3": 780.0,
     "species": [{"element": "Li", "isotope": 7, "count": 4},
                 {"element": "H", "isotope": 1, "polarized": true, "count": 4}],
     "lattice": {"a_A": 4.084,
                 "basis": [{"element": "Li", "isotope": 7, "frac": [0,0,0]}, ...]}}

The optional lattice block feeds the plane-wave bulk band cross-check.
"""

from __future__ import annotations

import json
from pathlib import Path

from .bands import CubicLattice
from .nuclides import CrystalComposition

MATERIALS_DIR = Path(__file__).parent / "data" / "materials"


def builtin_materials() -> dict:
    """Alias -> shipped composition file."""
    return {p.stem.lower(): p for p in sorted(MATERIALS_DIR.glob("*.json"))}


def load_material(name_or_path) -> tuple:
    """Resolve an alias or file path to (composition, lattice-or-None)."""
    path = Path(name_or_path)
    if not path.exists():
        alias = str(name_or_path).lower()
        try:
            path = builtin_materials()[alias]
        except KeyError:
            known = ", ".join(sorted(builtin_materials()))
            raise FileNotFoundError(
                f"no composition file and no built-in material {name_or_path!r} "
                f"(built-ins: {known})"
            ) from None
    obj = json.loads(path.read_text(encoding="utf-8"))
    species = [
        (
            s["element"],
            s.get("isotope"),
            bool(s.get("polarized", False)),
            int(s["count"]),
        )
        for s in obj["species"]
    ]
    comp = CrystalComposition.make(
        obj["name"],
        species,
        float(obj["cell_volume_A3"]),
        obj.get("mass_density_kg_m3"),
    )
    lattice = None
    if "lattice" in obj:
        lat = obj["lattice"]
        basis = tuple(
            (
                (b["element"], b.get("isotope"), bool(b.get("polarized", False))),
                tuple(float(x) for x in b["frac"]),
            )
            for b in lat["basis"]
        )
        lattice = CubicLattice(a_A=float(lat["a_A"]), basis=basis)
    return comp, lattice
