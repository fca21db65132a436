import json
import subprocess
import sys

import pytest

from locforge import SCHEMA
from locforge.cli import EXIT_BUDGET, EXIT_CONFIG, EXIT_FAIL, EXIT_OK, fusion_from_json, fusion_to_json, main

from conftest import fusion, group


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out) if out.strip() else None


def _mutated_fixture(tmp_path):
    doc = fusion_to_json(fusion("S4"), group("S4"))
    i = next(k for k, m in enumerate(doc["morphisms"]) if m["source"] and m["images"] != m["source"])
    del doc["morphisms"][i]
    doc["realized"] = False
    path = tmp_path / "mutated.json"
    path.write_text(json.dumps(doc))
    return path


def test_axioms_catalog(capsys):
    code, doc = run_json(capsys, "axioms", "--group", "S4", "--p", "2")
    assert code == EXIT_OK and doc["schema"] == SCHEMA and doc["passed"]
    assert {c["name"] for c in doc["checks"]} >= {"inclusion_full", "sylow_automorphisms", "extension"}


def test_axioms_trivial(capsys):
    assert run_json(capsys, "axioms", "--group", "trivial")[0] == EXIT_OK


def test_axioms_mutated_fixture_fails(capsys, tmp_path):
    code, doc = run_json(capsys, "axioms", "--fusion-file", str(_mutated_fixture(tmp_path)))
    assert code == EXIT_FAIL and not doc["passed"]
    failed = [c for c in doc["checks"] if not c["passed"]]
    assert failed and all(c.get("witness") for c in failed)


def test_fusion_json_roundtrip(tmp_path):
    F = fusion("A4")
    doc = fusion_to_json(F, group("A4"))
    G, H = fusion_from_json(json.loads(json.dumps(doc)))
    assert G.realized_by is H
    assert {Q.elems: sorted(h.images for h in v) for Q, v in G.homs.items()} == \
        {Q.elems: sorted(h.images for h in v) for Q, v in F.homs.items()}


def test_basic_set(capsys):
    code, doc = run_json(capsys, "basic-set", "--group", "S4", "--objects", "sc")
    assert code == EXIT_OK
    assert sum(o["multiplicity"] for o in doc["biset"]) == 2
    code, doc = run_json(capsys, "basic-set", "--group", "S4", "--objects", "P")
    assert code == EXIT_OK and sum(o["multiplicity"] for o in doc["biset"]) == 1


def test_objects_from_list(capsys, tmp_path):
    path = tmp_path / "objs.json"
    P = fusion_to_json(fusion("S4"), group("S4"))["P"]
    path.write_text(json.dumps([P]))
    assert run_json(capsys, "basic-set", "--group", "S4", "--objects", f"list:{path}")[0] == EXIT_OK
    path.write_text(json.dumps([["(0 2)(1 3)"]]))
    assert run(capsys, "basic-set", "--group", "S4", "--objects", f"list:{path}")[0] == EXIT_CONFIG


def test_cohomology_catalog_and_controls(capsys):
    code, doc = run_json(capsys, "cohomology", "--group", "S4")
    assert code == EXIT_OK
    code, doc = run_json(capsys, "cohomology", "--control", "final")
    assert code == EXIT_OK and all(r["group"]["torsion"] == [] for r in doc["cohomology"])
    code, doc = run_json(capsys, "cohomology", "--control", "z2", "--degrees", "1")
    assert code == EXIT_OK and doc["cohomology"][0]["group"]["torsion"] == [2]


def test_budget_exit_code(capsys):
    assert run(capsys, "cohomology", "--group", "S4", "--chain-budget", "5")[0] == EXIT_BUDGET


@pytest.mark.parametrize("argv", [
    ["axioms", "--group", "nope"],
    ["axioms", "--group", "S4", "--p", "4"],
    ["axioms"],
    ["axioms", "--group", "S4", "--objects", "weird"],
])
def test_config_errors(capsys, argv):
    assert run(capsys, *argv)[0] == EXIT_CONFIG


def test_group_file(capsys, tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("degree: 4\n(0 1 2)\n(0 1)(2 3)\n")
    assert run(capsys, "axioms", "--group-file", str(path))[0] == EXIT_CONFIG  # --p missing
    assert run_json(capsys, "axioms", "--group-file", str(path), "--p", "2")[0] == EXIT_OK


def test_perfect_locality_writes_files(capsys, tmp_path):
    code, doc = run_json(capsys, "perfect-locality", "--group", "S4", "--out", str(tmp_path))
    assert code == EXIT_OK
    names = {c["name"]: c["passed"] for c in doc["checks"]}
    assert names["perfect"] and names["oracle_isomorphic"] and names["localizers"]
    cert = json.loads((tmp_path / "certificate.json").read_text())
    loc = json.loads((tmp_path / "locality.json").read_text())
    assert cert == doc and loc["schema"] == SCHEMA


def test_perfect_locality_base_P(capsys):
    code, doc = run_json(capsys, "perfect-locality", "--group", "S4", "--objects", "P")
    assert code == EXIT_OK and doc["perfect"]["objects"] == 1


def test_perfect_locality_two_seeds(capsys):
    code, doc = run_json(capsys, "perfect-locality", "--group", "S4", "--seed", "1", "--compare-seeds", "2")
    assert code == EXIT_OK
    assert next(c for c in doc["checks"] if c["name"] == "seed_independent")["passed"]


def test_byte_identical_output(capsys, tmp_path):
    outs = []
    for d in ("a", "b"):
        code, out, _ = run(capsys, "perfect-locality", "--group", "A4", "--seed", "7", "--out", str(tmp_path / d))
        assert code == EXIT_OK
        outs.append(out)
    assert outs[0] == outs[1]
    for f in ("certificate.json", "locality.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_timing_flag(capsys):
    code, doc = run_json(capsys, "axioms", "--group", "A4", "--timing")
    assert all("seconds" in c for c in doc["checks"])


def test_text_format(capsys):
    code, out, _ = run(capsys, "axioms", "--group", "S4", "--format", "text")
    assert code == EXIT_OK and out.splitlines()[-1] == "all checks passed"


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "locforge.cli", "axioms", "--group", "trivial"], capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["passed"]
