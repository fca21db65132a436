"""Command line driver: runs one family of checks and writes a JSON certificate.

    locforge axioms --group S4
    locforge basic-set --group A4 --objects sc
    locforge cohomology --group S4 --degrees 1,2
    locforge cohomology --control z2
    locforge perfect-locality --group Q8 --seed 3 --out runs/q8
    locforge perfect-locality --group S4 --seed 1 --compare-seeds 2

Exit codes: 0 every check passed, 1 some check failed, 2 bad configuration,
3 a chain or enumeration budget was exceeded.

Certificate schema (``"schema": "locality-forge/1"``)::

    {"schema", "command", "config": {...}, "passed": bool,
     "checks": [{"name", "passed", "witness"?, "seconds"?}], ...command data}

Timings are included only with ``--timing`` so that equal configurations
give byte-identical files.

Fusion-system files (``--fusion-file``) use the same schema tag::

    {"schema": "locality-forge/1", "kind": "fusion-system", "p": 2,
     "degree": 4, "ambient": ["(0 1 2 3)", "(0 1)"], "realized": true,
     "P": ["(0 1 2 3)", "(0 2)"],
     "morphisms": [{"source": [gens...], "images": [images of gens...]}]}

Subgroups are given by generators in cycle notation on the ambient
points; a morphism lists the images of the source generators. The
morphisms are all F-morphisms into P. Object lists (``--objects
list:<file>``) are JSON lists of subgroups in the same generator form.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import SCHEMA
from .catalog import ALIASES, CATALOG, catalog_group, entry
from .groups import CapExceeded, Hom, PermGroup, Subgroup, cycle_string, parse_cycles

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- input

def _subgroup_from_gens(G: PermGroup, gens: list[str]) -> Subgroup:
    return G.generate([G.index[parse_cycles(g, G.degree)] for g in gens])


def _gens_text(S: Subgroup) -> list[str]:
    return [S.group.label(g) for g in S.generators]


def _hom_from_gens(R: Subgroup, P: Subgroup, images: list[int]) -> Hom:
    G = R.group
    gens = list(R.generators)
    if len(gens) != len(images):
        raise ConfigError("morphism must give one image per source generator")
    table = {0: 0}
    frontier = [0]
    while frontier:
        nxt = []
        for x in frontier:
            for g, h in zip(gens, images):
                y, v = int(G.mul[x, g]), int(G.mul[table[x], h])
                if y in table:
                    if table[y] != v:
                        raise ConfigError("generator images do not define a homomorphism")
                else:
                    table[y] = v
                    nxt.append(y)
        frontier = nxt
    return Hom(R, P, tuple(table[x] for x in R.elems))


def fusion_to_json(F, ambient: PermGroup) -> dict:
    morphs = []
    for R in F.subgroups:
        for h in F.homs[R]:
            morphs.append({"source": _gens_text(R), "images": [ambient.label(h(g)) for g in R.generators]})
    return {"schema": SCHEMA, "kind": "fusion-system", "p": F.p, "degree": ambient.degree,
            "ambient": [cycle_string(g) for g in ambient.generators], "realized": F.realized_by is not None,
            "P": _gens_text(F.P), "morphisms": morphs}


def fusion_from_json(doc: dict):
    from .fusion import FusionSystem

    if doc.get("schema") != SCHEMA or doc.get("kind") != "fusion-system":
        raise ConfigError("not a locality-forge/1 fusion-system document")
    d = int(doc["degree"])
    G = PermGroup(d, [parse_cycles(g, d) for g in doc["ambient"]])
    P = _subgroup_from_gens(G, doc["P"])
    homs: dict = {}
    for m in doc["morphisms"]:
        R = _subgroup_from_gens(G, m["source"])
        imgs = [G.index[parse_cycles(x, d)] for x in m["images"]]
        homs.setdefault(R, []).append(_hom_from_gens(R, P, imgs))
    return FusionSystem(P, int(doc["p"]), homs, realized_by=G if doc.get("realized") else None), G


def _is_prime(p: int) -> bool:
    return p > 1 and all(p % q for q in range(2, int(p ** 0.5) + 1))


def load_system(args):
    """(F, ambient group, description) from --group / --group-file / --fusion-file."""
    from .fusion import fusion_from_group

    sources = [x for x in (args.group, args.group_file, args.fusion_file) if x]
    if len(sources) != 1:
        raise ConfigError("give exactly one of --group, --group-file, --fusion-file")
    if args.fusion_file:
        F, G = fusion_from_json(json.loads(Path(args.fusion_file).read_text()))
        if args.p and args.p != F.p:
            raise ConfigError("--p disagrees with the fusion file")
        return F, G, {"fusion_file": str(args.fusion_file)}
    if args.group:
        try:
            e = entry(args.group)
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
        G = catalog_group(args.group)
        p = args.p or e.p
        desc = {"group": ALIASES.get(args.group, args.group)}
    else:
        G = PermGroup.from_text(Path(args.group_file).read_text())
        if not args.p:
            raise ConfigError("--p is required with --group-file")
        p = args.p
        desc = {"group_file": str(args.group_file)}
    if not _is_prime(p):
        raise ConfigError(f"p = {p} is not prime")
    return fusion_from_group(G, p), G, desc


def load_objects(F, G: PermGroup, selector: str) -> list[Subgroup]:
    from .fusion import is_selfcentralizing

    if selector == "sc":
        return list(F.sc)
    if selector == "P":
        return [F.P]
    if selector.startswith("list:"):
        data = json.loads(Path(selector[5:]).read_text())
        X = sorted({_subgroup_from_gens(G, gens) for gens in data})
        bad = [S for S in X if not S.le(F.P) or not is_selfcentralizing(F, S)]
        if bad:
            raise ConfigError(f"{len(bad)} listed subgroups are not F-selfcentralizing subgroups of P")
        return X
    raise ConfigError(f"unknown object selector {selector!r}")


# ---------------------------------------------------------------- certificates

class Certificate:
    def __init__(self, command: str, config: dict, timing: bool):
        self.command = command
        self.config = config
        self.timing = timing
        self.checks: list[dict] = []
        self.data: dict = {}
        self._t = time.perf_counter()

    def add(self, name: str, passed: bool, witness=None) -> None:
        now = time.perf_counter()
        row = {"name": name, "passed": bool(passed)}
        if witness is not None and not passed:
            row["witness"] = witness
        if self.timing:
            row["seconds"] = round(now - self._t, 3)
        self._t = now
        self.checks.append(row)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def to_json(self) -> dict:
        return {"schema": SCHEMA, "command": self.command, "config": self.config, "passed": self.passed,
                "checks": self.checks, **self.data}


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(x):
    try:
        import numpy as np

        if isinstance(x, np.integer):
            return int(x)
        if isinstance(x, np.ndarray):
            return x.tolist()
    except ImportError:  # pragma: no cover
        pass
    if isinstance(x, (set, frozenset, tuple)):
        return sorted(x) if isinstance(x, (set, frozenset)) else list(x)
    raise TypeError(f"not serializable: {type(x)}")


# ---------------------------------------------------------------- commands

def cmd_axioms(args, cert: Certificate, F, G, X) -> None:
    from .fusion import check_frobenius_axioms

    rep = check_frobenius_axioms(F)
    for name, ok in rep.checks.items():
        cert.add(name, ok, [w for w in rep.witnesses if w["check"] == name] or None)
    cert.data["fusion"] = {"order_P": F.P.order, "p": F.p, "classes": len(F.classes), "sc": len(F.sc)}


def cmd_basic_set(args, cert: Certificate, F, G, X) -> None:
    from .biset import fixed_points, natural_basic_set, verify_f_basic

    omega = natural_basic_set(F, X)
    rep = verify_f_basic(omega, F, X, check_fusion=False)
    for name, ok in rep.checks.items():
        cert.add(f"basic:{name}", ok, [w for w in rep.witnesses if w["check"] == name] or None)
    bad = []
    for Q in X:
        want = Q.center.order
        for phi in F.homs[Q]:
            got = fixed_points(omega, Q, phi)
            if got != want:
                bad.append({"Q": list(Q.elems), "phi": list(phi.images), "fixed": got, "center": want})
    cert.add("fixed_points_equal_center", not bad, bad[:5] or None)
    n_orbits = omega.total_size // F.P.order
    ext_p = len(F.ext(F.P, F.P))
    cert.add("orbit_count_mod_p", (n_orbits - ext_p) % F.p == 0, {"size_over_P": n_orbits, "outer": ext_p})
    cert.data["biset"] = omega.to_json()


def cmd_cohomology(args, cert: Certificate, F, G, X) -> None:
    from .cohomology import (CochainComplex, admissible_chains, cohomology, constant_functor, count_T_set,
                             exterior_category, group_category, kernel_functor, parallel_arrows_category)
    from .abelian import FinAb
    from .locality import natural_locality

    degrees = [int(n) for n in args.degrees.split(",")]
    reports = []
    if args.control:
        C = parallel_arrows_category() if args.control == "z2" else group_category(1)
        K = CochainComplex(constant_functor(C, FinAb((2,))), budget=args.chain_budget)
        for n in degrees:
            r = cohomology(K, n, witnesses=True)
            reports.append(r.to_json())
            expect = (2,) if (args.control == "z2" and n == 1) else ()
            cert.add(f"H{n}_control", tuple(r.invariants) == expect, {"invariants": list(r.invariants)})
        cert.data["cohomology"] = reports
        return
    L = natural_locality(F, X)
    C = exterior_category(F, X)
    K = CochainComplex(kernel_functor(L, C), budget=args.chain_budget)
    for n in degrees:
        for stable in (False, True):
            r = cohomology(K, n, stable=stable, witnesses=True)
            reports.append(r.to_json())
            if n >= 1:
                cert.add(f"H{n}{'_stable' if stable else ''}_vanishes", r.vanishes, r.to_json() if not r.vanishes else None)
    counts = []
    bad = []
    for n in (1, 2):
        for q in admissible_chains(F, X, C, n, budget=args.chain_budget):
            t = count_T_set(F, X, C, q)
            counts.append(t.direct)
            if not (t.agree and t.prime_to_p):
                bad.append({"chain": list(q.morphisms), "direct": t.direct, "formula": t.formula})
    cert.add("T_set_counts_prime_to_p", not bad, bad[:5] or None)
    cert.data["cohomology"] = reports
    cert.data["T_set_counts"] = {"chains": len(counts)}


def cmd_perfect(args, cert: Certificate, F, G, X) -> None:
    from .fusion import check_frobenius_axioms
    from .perfect import build_perfect_locality, compare_with_oracle, localizer, localizer_of_locality

    ax = check_frobenius_axioms(F)
    cert.add("axioms", ax.passed, ax.witnesses[:5] or None)
    res = build_perfect_locality(F, X, seed=args.seed)
    for i, step in enumerate(res.steps):
        ok = all(step.checks.values()) and step.routes_agree is not False
        cert.add(f"step{i}:|U|={step.U.order}", ok, {**step.checks, "routes_agree": step.routes_agree})
    rep = res.check()
    cert.add("perfect", rep.passed, rep.witnesses[:5] or None)
    if F.realized_by is not None:
        verdict = compare_with_oracle(res)
        cert.add("oracle_isomorphic", verdict["isomorphic"])
        bad = []
        for Q in res.objects:
            if F.is_fully_normalized(Q):
                loc = localizer(F, Q)
                if loc.order != localizer_of_locality(res.locality, Q) or not all(loc.check().values()):
                    bad.append(list(Q.elems))
        cert.add("localizers", not bad, bad or None)
    if args.compare_seeds:
        from .perfect import seed_independence

        seeds = [args.seed or 0] + [int(x) for x in args.compare_seeds.split(",")]
        out = seed_independence(F, seeds, X)
        cert.add("seed_independent", out["all"], {"seeds": seeds, "isomorphic": out["isomorphic"], "natural": out["natural"]})
    cert.data["perfect"] = {**res.summary(), "seed": args.seed,
                            "sections": [s.section_stats for s in res.steps]}
    cert.data["_locality"] = res.locality.to_json()


COMMANDS = {
    "axioms": cmd_axioms,
    "basic-set": cmd_basic_set,
    "cohomology": cmd_cohomology,
    "perfect-locality": cmd_perfect,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="locforge", description="Fusion systems, bisets and localities: checks with certificates.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--group", help=f"catalog name: {', '.join(CATALOG)}")
        sp.add_argument("--group-file", help="'degree: d' then one generator per line")
        sp.add_argument("--fusion-file", help="fusion system JSON (see module docstring)")
        sp.add_argument("--p", type=int)
        sp.add_argument("--objects", default="sc", help="sc | P | list:<file>")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--chain-budget", type=int, default=200_000)
        sp.add_argument("--out", help="directory for certificate.json (and locality.json)")
        sp.add_argument("--format", choices=("json", "text"), default="json")
        sp.add_argument("--timing", action="store_true", help="record per-check seconds")
        if name == "cohomology":
            sp.add_argument("--degrees", default="1,2")
            sp.add_argument("--control", choices=("z2", "final"), help="run a control category instead of a group")
        if name == "perfect-locality":
            sp.add_argument("--compare-seeds", help="comma separated seeds to rebuild with and compare against --seed")
    return ap


def _emit(cert: Certificate, args, extra: dict | None) -> None:
    doc = cert.to_json()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "certificate.json").write_text(_dump(doc))
        if extra is not None:
            (out / "locality.json").write_text(_dump({"schema": SCHEMA, **extra}))
    if args.format == "text":
        for c in cert.checks:
            t = f"  ({c['seconds']}s)" if "seconds" in c else ""
            print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}{t}")
        print("all checks passed" if cert.passed else "some checks FAILED")
    else:
        sys.stdout.write(_dump(doc))


def main(argv: list[str] | None = None) -> int:
    from .cohomology import ChainBudgetExceeded
    from .fusion import XNotSelfcentralizing

    args = build_parser().parse_args(argv)
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("format", "out", "timing") and v is not None}
    cert = Certificate(args.command, config, args.timing)
    try:
        if args.command == "cohomology" and args.control:
            F = G = X = None
        else:
            F, G, _ = load_system(args)
            X = load_objects(F, G, args.objects)
        COMMANDS[args.command](args, cert, F, G, X)
    except (ConfigError, XNotSelfcentralizing, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ChainBudgetExceeded, CapExceeded) as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    extra = cert.data.pop("_locality", None)
    _emit(cert, args, extra)
    return EXIT_OK if cert.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
