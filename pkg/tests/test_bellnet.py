import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from realqm.bellnet import (OPTIMUM, W, Behavior, BellError, Strategy, behavior_from_strategy,
                            bell_score, build_optimal_complex_strategy, correlators, load_behavior,
                            load_strategy, local_maximum, ns_check, search_charlie_signs)
from realqm.qmat import DensityMatrix, random_povm, random_state

SHAPE = (3, 6, 2, 4, 2)


def product_behavior(rng) -> Behavior:
    pa = rng.dirichlet(np.ones(2), size=3)
    pb = rng.dirichlet(np.ones(4))
    pc = rng.dirichlet(np.ones(2), size=6)
    return Behavior(np.einsum("xa,b,zc->xzabc", pa, pb, pc))


def test_coefficients_shape_and_values():
    assert W.shape == (4, 3, 6)
    assert set(np.unique(np.abs(W))) <= {0.0, 1.0}


def test_local_maximum_is_six():
    assert local_maximum() == pytest.approx(6.0)


def test_optimal_strategy_reaches_six_root_two():
    beh = behavior_from_strategy(build_optimal_complex_strategy())
    rep = bell_score(beh)
    assert abs(rep.total - OPTIMUM) < 1e-9
    assert np.allclose(rep.bob_marginal, 0.25)
    assert np.all(rep.chsh() <= 2 * np.sqrt(2) * rep.bob_marginal[:, None] + 1e-9)


def test_sign_search_keeps_the_default_signs():
    signs, score = search_charlie_signs()
    assert signs == (1, 1, 1, 1, 1, 1)
    assert abs(score - OPTIMUM) < 1e-9


@given(st.integers(0, 2 ** 32 - 1))
def test_product_behavior_scores_within_local_bound(seed):
    beh = product_behavior(np.random.default_rng(seed))
    assert bell_score(beh).total <= 6 + 1e-9


def test_uniform_behavior_scores_zero():
    assert bell_score(Behavior.uniform()).total == pytest.approx(0.0)


def test_ns_check_flags_signalling():
    p = np.array(Behavior.uniform().p)
    p[0, 1, 0, 0, 0] += 0.05
    p[0, 1, 1, 0, 0] -= 0.05
    bad = ns_check(p)
    assert bad and all(v.magnitude > 0 for v in bad)
    with pytest.raises(BellError):
        Behavior(p)


def test_ns_check_flags_shape_and_negativity():
    assert ns_check(np.zeros((2, 2)))
    p = np.array(Behavior.uniform().p)
    p[0, 0, 0, 0, 0] = -0.1
    p[0, 0, 1, 0, 0] += 0.1
    assert any("positivity" in v.constraint for v in ns_check(p))


def test_correlator_sign_convention():
    p = np.zeros(SHAPE)
    p[:, :, 0, 0, 0] = 1.0  # a = c = +1 always, b = 00
    s = correlators(p)
    assert np.all(s[0] == 1) and np.all(s[1:] == 0)


@given(st.integers(0, 2 ** 32 - 1), st.floats(0, 1))
def test_mixing_is_linear(seed, lam):
    rng = np.random.default_rng(seed)
    b1, b2 = product_behavior(rng), product_behavior(rng)
    mix = b1.mix(b2, lam)
    assert bell_score(mix).total == pytest.approx(
        lam * bell_score(b1).total + (1 - lam) * bell_score(b2).total, abs=1e-9)


def test_random_quantum_strategy_is_no_signalling():
    rng = np.random.default_rng(8)
    rho = random_state((2, 2, 2), rng, field="complex")
    s = Strategy("complex", rho,
                 tuple(random_povm(2, 2, rng, field="complex") for _ in range(3)),
                 tuple(random_povm(2, 4, rng, field="complex")),
                 tuple(random_povm(2, 2, rng, field="complex") for _ in range(6)))
    beh = behavior_from_strategy(s)
    assert ns_check(beh.p) == []
    assert bell_score(beh).total <= OPTIMUM + 1e-9


def test_real_strategy_rejects_complex_entries():
    opt = build_optimal_complex_strategy()
    with pytest.raises(BellError):
        Strategy("real", opt.state, opt.alice, opt.bob, opt.charlie)


def test_strategy_rejects_bad_povm():
    opt = build_optimal_complex_strategy()
    bad = (opt.alice[0], opt.alice[1], (np.eye(2), np.eye(2)))
    with pytest.raises(BellError):
        Strategy("complex", opt.state, bad, opt.bob, opt.charlie)


def test_strategy_rejects_wrong_sources():
    opt = build_optimal_complex_strategy()
    mixed = DensityMatrix(np.eye(4, dtype=complex) / 4, (2, 2))
    with pytest.raises(BellError):
        Strategy("complex", opt.state, opt.alice, opt.bob, opt.charlie, sources=(mixed, mixed))


def test_json_roundtrips(tmp_path):
    opt = build_optimal_complex_strategy()
    path = tmp_path / "s.json"
    path.write_text(json.dumps(opt.to_json_dict()))
    again = load_strategy(path)
    assert bell_score(behavior_from_strategy(again)).total == pytest.approx(OPTIMUM)
    beh = behavior_from_strategy(opt)
    bpath = tmp_path / "b.json"
    bpath.write_text(json.dumps(beh.to_json_dict()))
    assert np.allclose(load_behavior(bpath).p, beh.p)


def test_malformed_json_raises():
    with pytest.raises(BellError):
        Behavior.from_json_dict({})
    with pytest.raises(BellError):
        Strategy.from_json_dict({"field": "complex"})


def test_no_signalling_box_reaches_twelve():
    from realqm.bellnet import no_signalling_box
    beh = no_signalling_box()
    assert ns_check(beh.p) == []
    assert bell_score(beh).total == pytest.approx(12.0)


def _strategy(state, alice, bob, charlie, fld="real"):
    return Strategy(fld, state, tuple(alice), tuple(bob), tuple(charlie))


def test_maximally_mixed_strategy_gives_uniform_behavior():
    half = (np.eye(2) / 2, np.eye(2) / 2)
    s = _strategy(DensityMatrix(np.eye(8) / 8, (2, 2, 2)), [half] * 3, [np.eye(2) / 4] * 4, [half] * 6)
    beh = behavior_from_strategy(s)
    assert np.allclose(beh.p, 1 / 16)
    assert bell_score(beh).total == pytest.approx(0.0)


def test_deterministic_product_strategy_matches_hand_count():
    # |0>|00>|0>, every projective measurement in the computational basis:
    # a = c = +1 and b = 00 always, so S^00_xz = 1 and B = sum_xz W[0, x, z]
    p0, p1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    bob = [np.diag(np.eye(4)[k]) for k in range(4)]
    state = DensityMatrix(np.diag(np.eye(16)[0]), (2, 4, 2))
    beh = behavior_from_strategy(_strategy(state, [(p0, p1)] * 3, bob, [(p0, p1)] * 6))
    assert beh.p[:, :, 0, 0, 0] == pytest.approx(np.ones((3, 6)))
    assert bell_score(beh).total == pytest.approx(W[0].sum())


def test_relabelling_alice_flips_correlators():
    beh = behavior_from_strategy(build_optimal_complex_strategy())
    flipped = np.array(beh.p)
    flipped[1] = flipped[1, :, ::-1]
    s0, s1 = correlators(beh.p), correlators(flipped)
    assert np.allclose(s1[:, 1], -s0[:, 1])
    assert np.allclose(np.delete(s1, 1, axis=1), np.delete(s0, 1, axis=1))
    rep = bell_score(flipped)
    assert rep.total == pytest.approx(np.einsum("bxz,bxz->", W, s1))


def test_correlators_bounded_by_bob_marginal():
    rep = bell_score(behavior_from_strategy(build_optimal_complex_strategy()))
    assert np.all(np.abs(rep.correlators) <= rep.bob_marginal[:, None, None] + 1e-12)
    assert rep.total == pytest.approx(rep.per_outcome.sum(), abs=1e-10)
