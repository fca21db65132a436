"""Permutation groups small enough to enumerate outright.

Every group is stored as its sorted element list plus a Cayley table, so
all later computations reduce to integer index arithmetic.  Elements are
image tuples; ``g * h`` means "apply h, then g".
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import _kernels

DEFAULT_CAP = 100_000


class CapExceeded(RuntimeError):
    """Enumeration would exceed the element cap."""


class NotSubgroup(ValueError):
    """A set of elements is not closed under the group law."""


class NotTransporting(ValueError):
    """An element does not conjugate the source into the target."""


# ---------------------------------------------------------------- permutations

_CYCLE = re.compile(r"\(([^()]*)\)")


def parse_cycles(text: str, degree: int) -> tuple[int, ...]:
    """Parse ``"(0 1 2)(3 4)"`` into an image tuple on ``degree`` points.

    The empty string, ``"()"`` and ``"id"`` all denote the identity.
    """
    img = list(range(degree))
    text = text.strip()
    if text in ("", "()", "id", "1"):
        return tuple(img)
    cycles = _CYCLE.findall(text)
    if not cycles or _CYCLE.sub("", text).strip():
        raise ValueError(f"cannot parse permutation {text!r}")
    # cycles are composed right to left, as functions
    for cyc in reversed(cycles):
        pts = [int(t) for t in re.split(r"[,\s]+", cyc.strip()) if t]
        if len(set(pts)) != len(pts):
            raise ValueError(f"repeated point in cycle ({cyc})")
        for x in pts:
            if not 0 <= x < degree:
                raise ValueError(f"point {x} outside degree {degree}")
        step = {pts[i]: pts[(i + 1) % len(pts)] for i in range(len(pts))}
        img = [step.get(v, v) for v in img]
    return tuple(img)


def cycle_string(perm: Sequence[int]) -> str:
    seen = set()
    out = []
    for start in range(len(perm)):
        if start in seen or perm[start] == start:
            continue
        cyc = [start]
        seen.add(start)
        x = perm[start]
        while x != start:
            cyc.append(x)
            seen.add(x)
            x = perm[x]
        out.append("(" + " ".join(map(str, cyc)) + ")")
    return "".join(out) or "()"


def compose(g: Sequence[int], h: Sequence[int]) -> tuple[int, ...]:
    return tuple(g[x] for x in h)


def invert(g: Sequence[int]) -> tuple[int, ...]:
    out = [0] * len(g)
    for i, x in enumerate(g):
        out[x] = i
    return tuple(out)


# ---------------------------------------------------------------- groups

class PermGroup:
    """A fully enumerated permutation group.

    ``elements`` is sorted lexicographically, so the identity has index 0
    and all "first found" choices are reproducible.
    """

    def __init__(self, degree: int, generators: Iterable[Sequence[int]], cap: int = DEFAULT_CAP, name: str = ""):
        self.degree = degree
        self.name = name
        self.generators = tuple(tuple(g) for g in generators)
        for g in self.generators:
            if sorted(g) != list(range(degree)):
                raise ValueError(f"{g} is not a permutation of {degree} points")
        self.elements = _close(degree, self.generators, cap)
        self.order = len(self.elements)
        arr = np.array(self.elements, dtype=np.int64).reshape(self.order, degree)
        weights = np.array([degree ** (degree - 1 - k) for k in range(degree)], dtype=np.int64)
        codes = arr @ weights
        self.mul = np.asarray(_kernels.cayley_table(arr, weights, codes))
        self.inv = np.argmin(self.mul, axis=1).astype(np.int32)  # identity is index 0
        self.index = {e: i for i, e in enumerate(self.elements)}

    @classmethod
    def from_text(cls, text: str, cap: int = DEFAULT_CAP, name: str = "") -> "PermGroup":
        """Read the ``degree: d`` plus one-generator-per-line format."""
        degree = None
        gens = []
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.lower().startswith("degree"):
                degree = int(line.split(":", 1)[1])
                continue
            if degree is None:
                raise ValueError("group file must start with 'degree: d'")
            gens.append(parse_cycles(line, degree))
        if degree is None:
            raise ValueError("missing 'degree: d' line")
        return cls(degree, gens, cap=cap, name=name)

    def __repr__(self):
        return f"PermGroup({self.name or self.degree}, order={self.order})"

    # index arithmetic
    def m(self, a: int, b: int) -> int:
        return int(self.mul[a, b])

    def i(self, a: int) -> int:
        return int(self.inv[a])

    def conj(self, g: int, x: int) -> int:
        """g x g^-1."""
        return int(self.mul[self.mul[g, x], self.inv[g]])

    @cached_property
    def conj_table(self) -> np.ndarray:
        """conj_table[g, x] = g x g^-1."""
        return self.mul[self.mul, self.inv[:, None]]

    def element_order(self, x: int) -> int:
        k, y = 1, x
        while y != 0:
            y = int(self.mul[y, x])
            k += 1
        return k

    @cached_property
    def whole(self) -> "Subgroup":
        return Subgroup(self, tuple(range(self.order)))

    def subgroup(self, elems: Iterable[int]) -> "Subgroup":
        return Subgroup.checked(self, elems)

    def generate(self, gens: Iterable[int]) -> "Subgroup":
        """Smallest subgroup containing ``gens`` (closure by right multiplication)."""
        gens = [int(g) for g in gens if g != 0]
        seen = {0}
        frontier = [0]
        while frontier:
            nxt = []
            for x in frontier:
                for g in gens:
                    y = int(self.mul[x, g])
                    if y not in seen:
                        seen.add(y)
                        nxt.append(y)
            frontier = nxt
        return Subgroup(self, tuple(sorted(seen)))

    def perm(self, x: int) -> tuple[int, ...]:
        return self.elements[x]

    def label(self, x: int) -> str:
        return cycle_string(self.elements[x])


def _close(degree: int, gens: tuple[tuple[int, ...], ...], cap: int) -> list[tuple[int, ...]]:
    ident = tuple(range(degree))
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = compose(g, x)
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
                    if len(seen) > cap:
                        raise CapExceeded(f"group has more than {cap} elements")
        frontier = nxt
    return sorted(seen)


@dataclass(frozen=True, eq=False)
class Subgroup:
    """A subgroup of an enumerated group, stored as sorted element indices."""

    group: PermGroup
    elems: tuple[int, ...]

    @classmethod
    def checked(cls, group: PermGroup, elems: Iterable[int]) -> "Subgroup":
        es = tuple(sorted(set(int(e) for e in elems)))
        if not es or es[0] != 0:
            raise NotSubgroup("subset does not contain the identity")
        s = frozenset(es)
        sub = group.mul[np.ix_(es, es)]
        if not np.isin(sub, es).all():
            raise NotSubgroup("subset is not closed under multiplication")
        return cls(group, es)

    def __eq__(self, other):
        return isinstance(other, Subgroup) and other.group is self.group and other.elems == self.elems

    def __hash__(self):
        return hash(self.elems)

    def __lt__(self, other):
        return (len(self.elems), self.elems) < (len(other.elems), other.elems)

    def __len__(self):
        return len(self.elems)

    def __iter__(self) -> Iterator[int]:
        return iter(self.elems)

    def __contains__(self, x) -> bool:
        return int(x) in self.set

    def __repr__(self):
        return f"Subgroup(order={len(self.elems)}, {self.elems})"

    @property
    def order(self) -> int:
        return len(self.elems)

    @cached_property
    def set(self) -> frozenset:
        return frozenset(self.elems)

    def le(self, other: "Subgroup") -> bool:
        return self.set <= other.set

    def conjugate(self, g: int) -> "Subgroup":
        """g S g^-1."""
        ct = self.group.conj_table
        return Subgroup(self.group, tuple(sorted(int(ct[g, x]) for x in self.elems)))

    def intersect(self, other: "Subgroup") -> "Subgroup":
        return Subgroup(self.group, tuple(sorted(self.set & other.set)))

    def join(self, other: "Subgroup") -> "Subgroup":
        return self.group.generate(self.elems + other.elems)

    @cached_property
    def generators(self) -> tuple[int, ...]:
        """A short generating set, chosen greedily in element order."""
        gens: list[int] = []
        cur = {0}
        for x in self.elems:
            if x not in cur:
                gens.append(x)
                cur = set(self.group.generate(gens).elems)
                if len(cur) == len(self.elems):
                    break
        return tuple(gens)

    def is_p_group(self, p: int) -> bool:
        n = self.order
        while n % p == 0:
            n //= p
        return n == 1

    def is_normal_in(self, other: "Subgroup") -> bool:
        return all(self.conjugate(g) == self for g in other.generators)

    @cached_property
    def center(self) -> "Subgroup":
        return centralizer(self, self)

    def is_abelian(self) -> bool:
        return self.center.order == self.order

    def right_cosets_reps(self, big: "Subgroup") -> list[int]:
        """Representatives g of the cosets S g in ``big``, each the least in its coset."""
        seen = set()
        reps = []
        mul = self.group.mul
        for g in big.elems:
            if g in seen:
                continue
            reps.append(g)
            seen.update(int(mul[s, g]) for s in self.elems)
        return reps

    def left_cosets_reps(self, big: "Subgroup") -> list[int]:
        seen = set()
        reps = []
        mul = self.group.mul
        for g in big.elems:
            if g in seen:
                continue
            reps.append(g)
            seen.update(int(mul[g, s]) for s in self.elems)
        return reps


def as_subgroup(G) -> Subgroup:
    return G.whole if isinstance(G, PermGroup) else G


# ---------------------------------------------------------------- basic operations

def enumerate_group(text_or_gens, degree: int | None = None, cap: int = DEFAULT_CAP) -> PermGroup:
    """Build the group from text or from (degree, generator tuples)."""
    if isinstance(text_or_gens, str):
        return PermGroup.from_text(text_or_gens, cap=cap)
    if degree is None:
        raise ValueError("degree is required with explicit generators")
    return PermGroup(degree, text_or_gens, cap=cap)


def centralizer(H, S) -> Subgroup:
    """Elements of H commuting with every element of S."""
    H, S = as_subgroup(H), as_subgroup(S)
    G = H.group
    ct = G.conj_table
    gens = S.generators
    keep = [h for h in H.elems if all(int(ct[h, s]) == s for s in gens)]
    return Subgroup(G, tuple(keep))


def normalizer(H, S) -> Subgroup:
    H, S = as_subgroup(H), as_subgroup(S)
    G = H.group
    ct = G.conj_table
    sset = S.set
    gens = S.generators
    keep = [h for h in H.elems if all(int(ct[h, s]) in sset for s in gens)]
    return Subgroup(G, tuple(keep))


def transporter(H, R: Subgroup, Q: Subgroup) -> list[int]:
    """T_H(R, Q) = {h in H : h R h^-1 <= Q}."""
    H = as_subgroup(H)
    ct = H.group.conj_table
    qs = Q.set
    gens = R.generators
    return [h for h in H.elems if all(int(ct[h, r]) in qs for r in gens)]


def sylow(G, p: int) -> Subgroup:
    """A Sylow p-subgroup, grown greedily through the element order."""
    G = as_subgroup(G)
    grp = G.group
    n = G.order
    target = 1
    while n % p == 0:
        n //= p
        target *= p
    H = grp.generate([])
    ct = grp.conj_table
    while H.order < target:
        for x in G.elems:
            if x in H or grp.element_order(x) % p or not _p_power(grp.element_order(x), p):
                continue
            if not all(int(ct[x, h]) in H.set for h in H.generators):
                continue
            K = grp.generate(H.generators + (x,))
            if K.is_p_group(p):
                H = K
                break
        else:  # pragma: no cover - impossible by Sylow's theorem
            raise RuntimeError("failed to enlarge p-subgroup")
    return H


def _p_power(n: int, p: int) -> bool:
    while n % p == 0:
        n //= p
    return n == 1


def o_upper_p(G, p: int) -> Subgroup:
    """The subgroup generated by all elements of order prime to p."""
    G = as_subgroup(G)
    grp = G.group
    gens = [x for x in G.elems if grp.element_order(x) % p]
    return grp.generate(gens)


def all_subgroups(S) -> list[Subgroup]:
    """The full subgroup lattice of S, built by joining cyclic subgroups.

    Sorted by (order, elements).
    """
    S = as_subgroup(S)
    grp = S.group
    cyclic = {grp.generate([x]) for x in S.elems}
    found = set(cyclic)
    frontier = set(cyclic)
    while frontier:
        new = set()
        for A in frontier:
            for C in cyclic:
                if C.le(A):
                    continue
                J = A.join(C)
                if J not in found:
                    new.add(J)
        found |= new
        frontier = new
    return sorted(found)


def conjugation_hom(g: int, R: Subgroup, Q: Subgroup) -> "Hom":
    """The map r -> g r g^-1 from R into Q."""
    ct = R.group.conj_table
    imgs = tuple(int(ct[g, r]) for r in R.elems)
    if not set(imgs) <= Q.set:
        raise NotTransporting(f"element {g} does not conjugate R into Q")
    return Hom(R, Q, imgs)


# ---------------------------------------------------------------- homomorphisms

@dataclass(frozen=True, eq=False)
class Hom:
    """An injective group homomorphism R -> Q between subgroups of one group.

    ``images[i]`` is the image of ``source.elems[i]``.
    """

    source: Subgroup
    target: Subgroup
    images: tuple[int, ...]

    @cached_property
    def key(self):
        return (self.source.elems, self.target.elems, self.images)

    def __eq__(self, other):
        return isinstance(other, Hom) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __lt__(self, other):
        return self.key < other.key

    def __repr__(self):
        return f"Hom({len(self.source)}->{len(self.target)}, {self.images})"

    @cached_property
    def table(self) -> dict[int, int]:
        return dict(zip(self.source.elems, self.images))

    def __call__(self, x: int) -> int:
        return self.table[int(x)]

    @cached_property
    def image(self) -> Subgroup:
        return Subgroup(self.source.group, tuple(sorted(self.images)))

    def is_homomorphism(self) -> bool:
        mul = self.source.group.mul
        t = self.table
        return all(t[int(mul[a, b])] == int(mul[t[a], t[b]]) for a in self.source.elems for b in self.source.generators)

    def is_injective(self) -> bool:
        return len(set(self.images)) == len(self.images)

    def is_iso(self) -> bool:
        return self.is_injective() and self.image == self.target

    def compose(self, other: "Hom") -> "Hom":
        """self o other: other.source -> self.target."""
        t = self.table
        return Hom(other.source, self.target, tuple(t[y] for y in other.images))

    __mul__ = compose

    def restrict(self, S: Subgroup) -> "Hom":
        t = self.table
        return Hom(S, self.target, tuple(t[x] for x in S.elems))

    def corestrict(self, Q: Subgroup) -> "Hom":
        if not set(self.images) <= Q.set:
            raise NotSubgroup("image not contained in new target")
        return Hom(self.source, Q, self.images)

    def inverse(self) -> "Hom":
        """Inverse of the isomorphism onto the image."""
        inv = {y: x for x, y in zip(self.source.elems, self.images)}
        im = self.image
        return Hom(im, self.source, tuple(inv[y] for y in im.elems))

    def image_of(self, S: Subgroup) -> Subgroup:
        t = self.table
        return Subgroup(S.group, tuple(sorted(t[x] for x in S.elems)))

    def preimage_of(self, S: Subgroup) -> Subgroup:
        return Subgroup(S.group, tuple(x for x, y in zip(self.source.elems, self.images) if y in S.set))


def identity_hom(R: Subgroup, Q: Subgroup | None = None) -> Hom:
    return Hom(R, Q or R, R.elems)


def all_injective_homs(R: Subgroup, Q: Subgroup) -> list[Hom]:
    """Every injective homomorphism R -> Q, found by extending on generators."""
    grp = R.group
    gens = R.generators
    if not gens:
        return [Hom(R, Q, (0,))]
    orders = [grp.element_order(g) for g in gens]
    cands = [[y for y in Q.elems if grp.element_order(y) == o] for o in orders]
    out = []
    words = _words(R)

    def extend(k, chosen):
        if k == len(gens):
            h = _hom_from_words(R, Q, words, chosen)
            if h is not None:
                out.append(h)
            return
        for y in cands[k]:
            extend(k + 1, chosen + [y])

    extend(0, [])
    return sorted(out)


def _words(R: Subgroup) -> dict[int, tuple[int, int]]:
    """For each element x != 1, a pair (y, k) with x = y * gens[k] and y earlier in BFS."""
    grp = R.group
    gens = R.generators
    words = {}
    seen = {0}
    frontier = [0]
    while frontier:
        nxt = []
        for y in frontier:
            for k, g in enumerate(gens):
                x = int(grp.mul[y, g])
                if x not in seen:
                    seen.add(x)
                    words[x] = (y, k)
                    nxt.append(x)
        frontier = nxt
    # dict order is BFS order, so parents always come first
    return words


def _hom_from_words(R, Q, words, chosen) -> Hom | None:
    grp = R.group
    val = {0: 0}
    for x, (y, k) in words.items():
        val[x] = int(grp.mul[val[y], chosen[k]])
    imgs = tuple(val[x] for x in R.elems)
    h = Hom(R, Q, imgs)
    if not h.is_injective() or not h.is_homomorphism():
        return None
    return h
