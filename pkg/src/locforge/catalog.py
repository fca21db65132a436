"""Built-in permutation groups, each with the prime it is studied at."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from .fusion import FusionSystem, fusion_from_group
from .groups import PermGroup, cycle_string, parse_cycles


@dataclass(frozen=True)
class Entry:
    degree: int
    generators: tuple[str, ...]
    p: int
    note: str


def _sl23() -> tuple[str, ...]:
    """SL(2,3) on the eight nonzero vectors of F_3^2."""
    vecs = [v for v in product(range(3), repeat=2) if v != (0, 0)]
    idx = {v: i for i, v in enumerate(vecs)}

    def perm(m):
        (a, b), (c, d) = m
        return tuple(idx[((a * x + b * y) % 3, (c * x + d * y) % 3)] for x, y in vecs)

    return cycle_string(perm(((1, 1), (0, 1)))), cycle_string(perm(((1, 0), (1, 1))))


CATALOG: dict[str, Entry] = {
    "trivial": Entry(1, (), 2, "the trivial group"),
    "S4": Entry(4, ("(0 1 2 3)", "(0 1)"), 2, "Sylow D8, two classes of V4"),
    "A4": Entry(4, ("(0 1 2)", "(0 1)(2 3)"), 2, "Sylow V4 with an automorphism of order 3"),
    "D8": Entry(4, ("(0 1 2 3)", "(0 2)"), 2, "a 2-group: only inner fusion"),
    "Q8": Entry(8, ("(0 1 3 6)(2 5 7 4)", "(0 2 3 7)(1 4 6 5)"), 2, "regular representation of Q8"),
    "SL23": Entry(8, _sl23(), 2, "SL(2,3) on nonzero vectors of F_3^2; Sylow Q8"),
    "A6": Entry(6, ("(0 1 2)", "(1 2 3 4 5)"), 2, "Sylow D8, V4 classes with automorphism groups S3"),
    "C3xC3:S3-wreath-slice": Entry(6, ("(0 1 2)", "(0 1)", "(0 3)(1 4)(2 5)"), 3,
                                   "S3 wr C2 at p = 3: Sylow C3 x C3"),
}

ALIASES = {"SL(2,3)": "SL23", "W": "C3xC3:S3-wreath-slice"}


def names() -> list[str]:
    return list(CATALOG)


def entry(name: str) -> Entry:
    key = ALIASES.get(name, name)
    if key not in CATALOG:
        raise KeyError(f"unknown catalog group {name!r}; choose from {', '.join(CATALOG)}")
    return CATALOG[key]


def catalog_group(name: str) -> PermGroup:
    e = entry(name)
    return PermGroup(e.degree, [parse_cycles(g, e.degree) for g in e.generators], name=ALIASES.get(name, name))


def catalog_fusion(name: str, p: int | None = None) -> FusionSystem:
    e = entry(name)
    return fusion_from_group(catalog_group(name), p or e.p)
