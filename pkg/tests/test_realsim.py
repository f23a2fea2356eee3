import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from realqm.bellnet import (OPTIMUM, Strategy, behavior_from_strategy, bell_score,
                            build_optimal_complex_strategy)
from realqm.measures import ef_two_rebit, rho_bar
from realqm.qmat import (SX, DensityMatrix, J, KrausMap, bell_vectors, proj, ptrace, random_channel,
                         random_povm, random_state)
from realqm.realsim import (BROADCAST_U, Y_MINUS, Y_PLUS, FrameBasis, Network, Party, SimulationError, Source,
                            broadcast, complex_born, complex_network_table, complexify_and_check_cp,
                            dephase, frame_state, j_on, lift_povm, lift_pure_vector, lift_state,
                            lifted_probabilities, random_star_network, simulate_measurement,
                            simulate_network, unlift)

seeds = st.integers(0, 2 ** 32 - 1)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_frame_basis_is_orthonormal(n):
    fb = FrameBasis.build(n)
    assert fb.r_vec @ fb.r_vec == pytest.approx(1)
    assert fb.i_vec @ fb.i_vec == pytest.approx(1)
    assert fb.r_vec @ fb.i_vec == pytest.approx(0, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_frame_state_is_mixture_of_frame_vectors(n):
    fb = FrameBasis.build(n)
    assert np.allclose(frame_state(n).mat, fb.projector / 2, atol=1e-12)


@pytest.mark.parametrize("n", [2, 3])
def test_j_on_any_rebit_acts_as_logical_j(n):
    fb = FrameBasis.build(n)
    for k in range(n):
        assert np.allclose(j_on(n, k) @ fb.projector, fb.logical_j, atol=1e-12)


def test_frame_size_limits():
    with pytest.raises(SimulationError):
        frame_state(0)
    with pytest.raises(SimulationError):
        frame_state(13)


@given(seeds, st.integers(1, 3))
def test_lift_unlift_roundtrip(seed, n):
    rho = random_state((2, 3), np.random.default_rng(seed), field="complex")
    s = lift_state(rho, n)
    assert not np.iscomplexobj(s.carrier.mat)
    assert np.allclose(unlift(s).mat, rho.mat, atol=1e-12)
    assert np.allclose(s.frame_marginal(), frame_state(n).mat, atol=1e-12)


@given(seeds)
def test_lifted_state_is_dephased(seed):
    rho = random_state((2,), np.random.default_rng(seed), field="complex")
    s = lift_state(rho, 2)
    for k in range(2):
        assert np.allclose(dephase(s.carrier.mat, s.carrier.dims, 2, k), s.carrier.mat, atol=1e-12)


@given(seeds, st.floats(0, 2 * np.pi))
def test_pure_lift_dephases_to_lifted_state(seed, phase):
    rng = np.random.default_rng(seed)
    psi = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    psi = np.exp(1j * phase) * psi / np.linalg.norm(psi)
    v = lift_pure_vector(psi, 1)
    rho = DensityMatrix.from_pure(psi, (3,))
    assert np.allclose(dephase(np.outer(v, v), (3, 2), 1), lift_state(rho, 1).carrier.mat, atol=1e-12)


@settings(max_examples=20)
@given(seeds, st.sampled_from([(2,), (2, 2), (2, 3), (3, 2)]))
def test_simulated_measurement_matches_born_rule(seed, dims):
    rng = np.random.default_rng(seed)
    rho = random_state(dims, rng, field="complex")
    elems = random_povm(dims[0], 3, rng, field="complex")
    probs, posts = complex_born(rho, elems, [0])
    s = lift_state(rho, 2)
    assert np.allclose(lifted_probabilities(s, elems, [0]), probs, atol=1e-10)
    lp, lposts = simulate_measurement(s, elems, [0], site=1)
    assert np.allclose(lp, probs, atol=1e-10)
    for cp, lpost in zip(posts, lposts):
        if cp is not None:
            assert np.allclose(unlift(lpost).mat, cp.mat, atol=1e-10)
            assert np.allclose(lpost.frame_marginal(), frame_state(2).mat, atol=1e-10)


def test_broadcast_unitary_and_copy():
    assert np.allclose(BROADCAST_U @ BROADCAST_U.T, np.eye(4))
    out = broadcast(frame_state(1), 0)
    assert np.allclose(out.mat, frame_state(2).mat, atol=1e-12)
    s = broadcast(lift_state(random_state((2,), np.random.default_rng(0), field="complex"), 1), 0)
    assert s.n == 2
    with pytest.raises(SimulationError):
        broadcast(frame_state(1), 3)


def test_lift_povm_rejects_invalid_elements():
    with pytest.raises(SimulationError):
        lift_povm([np.eye(2), np.eye(2)])
    with pytest.raises(SimulationError):
        lift_povm([np.diag([2.0, -1.0]), np.diag([-1.0, 2.0])])


def test_measurement_argument_checks():
    s = lift_state(random_state((2, 2), np.random.default_rng(1), field="complex"), 1)
    with pytest.raises(SimulationError):
        simulate_measurement(s, [np.eye(2)], [])
    with pytest.raises(SimulationError):
        simulate_measurement(s, [np.eye(2)], [5])
    with pytest.raises(SimulationError):
        simulate_measurement(s, [np.eye(3)], [0])


@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_complexified_real_channels_are_cp(seed, din, dout):
    ch = random_channel(din, dout, np.random.default_rng(seed), field="real")
    kc, lo = complexify_and_check_cp(ch)
    assert lo > -1e-9
    assert isinstance(kc, KrausMap)


def test_transpose_map_is_not_cp():
    _, lo = complexify_and_check_cp(lambda x: x.T, din=2)
    assert lo == pytest.approx(-1.0)


def test_optimal_strategy_network_simulation():
    strat = build_optimal_complex_strategy()
    res = simulate_network(strat)
    assert res.locality_ok
    assert res.source_marginal_error < 1e-12
    assert bell_score(res.behavior).total == pytest.approx(OPTIMUM, abs=1e-9)
    assert not np.iscomplexobj(res.source_state)
    actors = {e.actor for e in res.audit}
    assert {"S1", "S2", "A", "B", "C"} <= actors


@pytest.mark.parametrize("m", [1, 2])
def test_star_network_matches_complex_oracle(m):
    net = random_star_network(m, np.random.default_rng(m))
    res = simulate_network(net)
    assert res.locality_ok
    assert np.allclose(res.table, complex_network_table(net), atol=1e-10)


def test_network_validation():
    rho = random_state((2, 2), np.random.default_rng(0), field="complex")
    with pytest.raises(SimulationError):
        Network((Source("S", rho, ("A",)),), (Party("A", ()),))
    with pytest.raises(SimulationError):
        Network((Source("S", rho, ("A", "X")),), (Party("A", ()),))


# worked examples --------------------------------------------------------------


def test_frame_state_small_cases():
    assert np.allclose(frame_state(1).mat, np.eye(2) / 2)
    f2 = frame_state(2).mat
    assert set(np.round(np.abs(f2[f2 != 0]), 12)) == {0.25}
    assert np.allclose(ptrace(frame_state(3).mat, (2, 2, 2), [0, 1]), f2)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_every_bipartition_of_the_frame_holds_rho_bar(n):
    for m in range(1, n):
        a, b = FrameBasis.build(m), FrameBasis.build(n - m)
        v = np.kron(np.column_stack([a.r_vec, a.i_vec]), np.column_stack([b.r_vec, b.i_vec]))
        logical = v.T @ frame_state(n).mat @ v
        assert np.allclose(logical, rho_bar().mat, atol=1e-12)
        assert ef_two_rebit(DensityMatrix(logical, (2, 2))) == pytest.approx(1.0, abs=1e-12)


def test_rho_bar_is_a_complex_separable_mixture():
    yp, ym = np.outer(Y_PLUS, Y_PLUS.conj()), np.outer(Y_MINUS, Y_MINUS.conj())
    assert np.allclose((np.kron(yp, yp) + np.kron(ym, ym)) / 2, rho_bar().mat)


def test_lift_of_real_state_is_a_product():
    rho = random_state((2,), np.random.default_rng(3), field="real")
    s = lift_state(rho, 2)
    assert np.allclose(s.carrier.mat, np.kron(rho.mat, FrameBasis.build(2).projector / 2))


def test_lift_of_y_plus_decodes_to_its_statistics():
    s = lift_state(DensityMatrix.from_pure(Y_PLUS, (2,)), 1)
    assert s.carrier.field == "real" and s.carrier.mat.shape == (4, 4)
    probs = lifted_probabilities(s, [np.outer(Y_PLUS, Y_PLUS.conj()), np.outer(Y_MINUS, Y_MINUS.conj())], [0])
    assert np.allclose(probs, [1, 0], atol=1e-12)


@pytest.mark.parametrize("phi", [np.pi / 7, 1.0, 2.5])
def test_global_phase_disappears_after_dephasing(phi):
    rng = np.random.default_rng(0)
    psi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    psi /= np.linalg.norm(psi)
    lifted = [lift_pure_vector(v, 1) for v in (psi, np.exp(1j * phi) * psi)]
    raw = [np.outer(v, v) for v in lifted]
    assert not np.allclose(raw[0], raw[1])
    deph = [dephase(r, (4, 2), 1) for r in raw]
    assert np.allclose(deph[0], deph[1], atol=1e-12)


def test_lift_povm_examples():
    comp = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    for e, op in zip(comp, lift_povm(comp)):
        assert np.allclose(op.matrix, np.kron(e, np.eye(2)))
    ys = [np.outer(Y_PLUS, Y_PLUS.conj()), np.outer(Y_MINUS, Y_MINUS.conj())]
    ops = lift_povm(ys)
    assert all(np.linalg.eigvalsh(o.matrix)[0] > -1e-12 for o in ops)
    assert np.allclose(sum(o.matrix for o in ops), np.eye(4))
    rnd = lift_povm(random_povm(3, 3, np.random.default_rng(5), field="complex"))
    assert np.max(np.abs(sum(o.matrix for o in rnd) - np.eye(6))) <= 1e-12
    for o in rnd:
        assert np.allclose(o.matrix, np.kron(o.re, np.eye(2)) + np.kron(o.im, J))


def test_broadcast_examples():
    assert np.allclose(broadcast(frame_state(2), 1).mat, frame_state(3).mat, atol=1e-12)
    rho = random_state((2,), np.random.default_rng(9), field="complex")
    grown = broadcast(lift_state(rho, 2), 0)
    assert np.allclose(grown.carrier.mat, lift_state(rho, 3).carrier.mat, atol=1e-12)
    back = ptrace(grown.carrier.mat, grown.carrier.dims, [0, 1, 2])
    assert np.allclose(back, lift_state(rho, 2).carrier.mat, atol=1e-12)


def test_measurement_examples():
    ys = [np.outer(Y_PLUS, Y_PLUS.conj()), np.outer(Y_MINUS, Y_MINUS.conj())]
    probs, _ = simulate_measurement(lift_state(DensityMatrix.from_pure(Y_PLUS, (2,)), 1), ys, [0])
    assert np.allclose(probs, [1, 0], atol=1e-12)
    phi = DensityMatrix.from_pure(bell_vectors()["phi+"].astype(complex), (2, 2))
    comp = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    probs, posts = simulate_measurement(lift_state(phi, 1), comp, [0])
    assert np.allclose(probs, [0.5, 0.5])
    for k, post in enumerate(posts):
        want = lift_state(DensityMatrix(np.diag(np.eye(2)[k]), (2,)), 1)
        assert np.allclose(post.carrier.mat, want.carrier.mat, atol=1e-10)


def test_born_rule_on_random_states_up_to_dimension_four():
    rng = np.random.default_rng(31)
    worst = 0.0
    for _ in range(1000):
        dims = [(2, 2), (4, 2), (2, 4), (4, 4), (3, 3)][int(rng.integers(5))]
        rho = random_state(dims, rng, field="complex")
        elems = random_povm(dims[0], int(rng.integers(2, 4)), rng, field="complex")
        want, _ = complex_born(rho, elems, [0])
        got = lifted_probabilities(lift_state(rho, 1), elems, [0])
        worst = max(worst, float(np.max(np.abs(got - want))))
    assert worst <= 1e-10


@given(seeds)
def test_dephasing_is_idempotent(seed):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((8, 8))
    m = g @ g.T
    once = dephase(m, (2, 2, 2), 2, 1)
    assert np.array_equal(dephase(once, (2, 2, 2), 2, 1), once)


@given(seeds)
def test_j_placement_does_not_matter(seed):
    rng = np.random.default_rng(seed)
    rho = random_state((2,), rng, field="complex")
    elems = random_povm(2, 3, rng, field="complex")
    s = lift_state(rho, 3)
    ref = lifted_probabilities(s, elems, [0], host=0)
    for host in (1, 2):
        assert np.allclose(lifted_probabilities(s, elems, [0], host=host), ref, atol=1e-12)


def test_complexify_examples():
    ident = KrausMap((np.eye(2),), (2,), (2,))
    kc, lo = complexify_and_check_cp(ident)
    omega = np.eye(2).reshape(4)
    assert np.allclose(kc.choi(), np.outer(omega, omega))
    assert lo >= -1e-12
    dep = KrausMap((np.sqrt(0.5) * np.eye(2), np.sqrt(0.5) * SX), (2,), (2,))
    assert complexify_and_check_cp(dep)[1] >= -1e-12


def test_real_strategy_network_ignores_the_frame():
    opt = build_optimal_complex_strategy()
    src = DensityMatrix(proj(bell_vectors()["phi+"]), (2, 2))
    state = DensityMatrix(np.kron(src.mat, src.mat), (2, 4, 2))
    real = Strategy("real", state, tuple((np.real(a), np.real(b)) for a, b in opt.alice[:2]) + (
        (np.diag([1.0, 0.0]), np.diag([0.0, 1.0])),),
        tuple(np.real(e) for e in opt.bob), tuple((np.eye(2) / 2, np.eye(2) / 2) for _ in range(6)),
        sources=(src, src))
    res = simulate_network(real)
    assert np.allclose(res.behavior.p, behavior_from_strategy(real).p, atol=1e-12)


def test_pre_shared_source_state_is_rho_bar():
    res = simulate_network(build_optimal_complex_strategy())
    assert np.allclose(res.source_state, rho_bar().mat, atol=1e-12)
    assert np.allclose(res.behavior.p, behavior_from_strategy(build_optimal_complex_strategy()).p, atol=1e-9)
