"""Smoke test for the ghostcheck extension module.

Build and install first:  pip install --no-build-isolation crates/py
"""
import json
from fractions import Fraction

import ghostcheck


def main():
    fan = ghostcheck.check(ghostcheck.generate(3, 4))
    comp = fan["components"][0]
    assert comp["theorem"]["rank"] == 12, comp
    assert fan["verdict"] == "NotEventuallySmoothable"

    p = ghostcheck.ObstructionProblem(1, 2, [([1], [0, 0]), (["2"], [1, Fraction(-1, 2)])])
    t = p.theorem_check()
    assert t["verdict"] == "Inconclusive" and t["kernel_witness"] == ["1", "0"], t
    assert p.corollary_check()["witness_D"] == [0]
    assert p.subset_ranks([1]) == (1, 1, 1)
    assert len(ghostcheck.ObstructionProblem.from_json(p.to_json())) == 2

    lm = ghostcheck.localmodel(json.dumps({"m": 2, "G": ["x"]}))
    assert lm["verdict"] == "pass" and lm["expected_residue"] == ["1"], lm
    bad = ghostcheck.localmodel(json.dumps({"m": 3, "G": ["t*y"]}))
    assert bad["verdict"] == "fail"
    exp = ghostcheck.expand_ghost(["x"], 2)
    assert len(exp["levels"]) == 2

    assert ghostcheck.dim_moduli(2, 2, 4) == 13
    assert ghostcheck.dim_stratum(2, 2, [(0, 1)] * 4) == 13

    try:
        ghostcheck.check("{")
    except ghostcheck.InputError as e:
        assert "json_syntax" in str(e)
    else:
        raise AssertionError("malformed input accepted")

    results = ghostcheck.selftest()
    assert len(results) == 9 and all(r["passed"] for r in results), results
    print("ghostcheck", ghostcheck.__version__, "smoke test passed")


if __name__ == "__main__":
    main()
