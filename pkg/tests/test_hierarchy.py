import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from realqm.bellnet import (behavior_from_strategy, bell_score, build_optimal_complex_strategy,
                            no_signalling_box)
from realqm.hierarchy import (HierarchyError, build_basis, build_moment_problem, moment_check,
                              reduce_word, solve_hierarchy)
from realqm.sdp import inspect_sdpa


@given(st.lists(st.integers(1, 3), max_size=8))
def test_reduce_word_is_idempotent_and_has_no_repeats(word):
    r = reduce_word(word)
    assert reduce_word(r) == r
    assert all(a != b for a, b in zip(r, r[1:]))
    assert set(r) == set(word)


@pytest.mark.parametrize("party,level,size", [
    ("alice", 1, 4), ("alice", 2, 10), ("alice", 3, 22),
    ("charlie", 1, 7), ("charlie", 2, 37), ("charlie", 3, 187),
])
def test_basis_sizes(party, level, size):
    b = build_basis(party, level)
    assert len(b) == size
    assert b.words[0] == ()
    assert b.label(()) == "1"


def test_basis_rejects_bad_arguments():
    with pytest.raises(HierarchyError):
        build_basis("bob", 1)
    with pytest.raises(HierarchyError):
        build_basis("alice", 4)
    with pytest.raises(HierarchyError):
        build_moment_problem(1, 1.5)


def test_level1_structure():
    mp = build_moment_problem(1, 0.1)
    assert mp.moment_side == 28
    assert mp.block_sizes[:6] == [28] * 5 + [56]
    s = mp.summary()
    assert s["alice_words"] == 4 and s["charlie_words"] == 7 and not s["fixed_behavior"]


def test_level2_structure():
    mp = build_moment_problem(2, 0.0)
    assert mp.block_sizes[:6] == [370] * 5 + [740]


def test_export_matches_builder(tmp_path):
    mp = build_moment_problem(1, 0.3)
    rep = solve_hierarchy(mp, "export", path=tmp_path / "l1.dat-s")
    info = inspect_sdpa(rep.path)
    assert info["errors"] == []
    assert [abs(s) for s in info["sizes"]] == mp.block_sizes
    assert info["m"] == mp.n_variables
    assert rep.to_json_dict()["path"] == str(tmp_path / "l1.dat-s")


def test_export_needs_path():
    with pytest.raises(HierarchyError):
        solve_hierarchy(build_moment_problem(1, 0.0), "export")
    with pytest.raises(HierarchyError):
        solve_hierarchy(build_moment_problem(1, 0.0), "magic")


def test_pinned_behavior_reads_back():
    beh = behavior_from_strategy(build_optimal_complex_strategy())
    mp = build_moment_problem(1, 0.0, fixed_behavior=beh)
    assert mp.fixed
    y = np.zeros(mp.n_variables)
    assert np.allclose(mp.behavior_from(y), beh.p, atol=1e-12)
    chk = moment_check(mp, y)
    assert chk["ns"] < 1e-12 and chk["min_p"] >= -1e-12


@pytest.mark.slow
def test_level1_rejects_the_algebraic_maximum():
    beh = no_signalling_box()
    assert bell_score(beh).total == pytest.approx(12.0)
    rep = solve_hierarchy(build_moment_problem(1, 0.0, fixed_behavior=beh))
    assert rep.feasible is False
    assert json.loads(json.dumps(rep.to_json_dict()))["feasible"] is False


def test_splitting_backend_reports_status():
    rep = solve_hierarchy(build_moment_problem(1, 0.0), "splitting", max_iters=20)
    assert rep.backend == "splitting"
    assert rep.status in ("Optimal", "Inaccurate")
    assert set(rep.residuals) == {"primal", "dual", "gap"}
