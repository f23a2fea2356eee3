import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from realqm.measures import rho_bar
from realqm.qmat import (SY, YY, DensityMatrix, FieldError, KrausMap, QmatError, apply_local,
                         bell_vectors, choi_of, clip_to_state, conjugate_local, dump_state, eigh,
                         from_json_dict, is_psd, ket, load_state, partial_trace, partial_transpose,
                         permute_subsystems, proj, ptrace, ptranspose, random_channel, random_povm,
                         random_state, tensor, to_json_dict, trace_distance, trace_norm)
from realqm.realsim import Y_PLUS, frame_state

dims_st = st.lists(st.integers(1, 3), min_size=1, max_size=3).map(tuple)


def test_density_matrix_validation():
    with pytest.raises(QmatError):
        DensityMatrix(np.eye(2), (2,))  # trace 2
    with pytest.raises(QmatError):
        DensityMatrix(np.diag([1.5, -0.5]), (2,))
    with pytest.raises(QmatError):
        DensityMatrix(np.array([[0.5, 0.1], [0.0, 0.5]]), (2,))
    with pytest.raises(QmatError):
        DensityMatrix(np.eye(3) / 3, (2,))


def test_field_tracks_dtype():
    r = DensityMatrix(np.eye(2) / 2, (2,))
    assert r.field == "real"
    assert r.to_complex().field == "complex"
    assert np.all(r.im == 0)


@given(dims=dims_st, seed=st.integers(0, 2 ** 32 - 1))
def test_ptrace_preserves_trace_and_positivity(dims, seed):
    rng = np.random.default_rng(seed)
    rho = random_state(dims, rng, field="complex")
    keep = [i for i in range(len(dims)) if rng.random() < 0.5] or [0]
    red = ptrace(rho.mat, dims, keep)
    assert abs(np.trace(red) - 1) < 1e-10
    assert is_psd(red)


def test_ptrace_of_product():
    rng = np.random.default_rng(0)
    a = random_state((2,), rng)
    b = random_state((3,), rng)
    ab = tensor(a, b)
    assert np.allclose(partial_trace(ab, [0]).mat, a.mat)
    assert np.allclose(partial_trace(ab, [1]).mat, b.mat)


@given(seed=st.integers(0, 2 ** 32 - 1))
def test_apply_local_matches_kron(seed):
    rng = np.random.default_rng(seed)
    dims = (2, 3, 2)
    m = rng.standard_normal((12, 12))
    op = rng.standard_normal((3, 3))
    full = np.kron(np.kron(np.eye(2), op), np.eye(2))
    assert np.allclose(apply_local(m, dims, op, [1]), full @ m)


def test_apply_local_noncontiguous_targets():
    rng = np.random.default_rng(3)
    dims = (2, 3, 2)
    m = rng.standard_normal((12, 12))
    a, c = rng.standard_normal((2, 2)), rng.standard_normal((2, 2))
    full = np.kron(np.kron(a, np.eye(3)), c)
    assert np.allclose(apply_local(m, dims, np.kron(a, c), [0, 2]), full @ m)
    assert np.allclose(conjugate_local(m, dims, np.kron(a, c), [0, 2]), full @ m @ full.T)


def test_permute_roundtrip():
    rng = np.random.default_rng(5)
    m = rng.standard_normal((12, 12))
    p = permute_subsystems(m, (2, 3, 2), [2, 0, 1])
    back = permute_subsystems(p, (2, 2, 3), [1, 2, 0])
    assert np.allclose(back, m)


def test_ptranspose_of_bell_state():
    phi = proj(bell_vectors()["phi+"])
    pt = ptranspose(phi, (2, 2), 0)
    assert np.isclose(np.linalg.eigvalsh(pt)[0], -0.5)


def test_trace_distance_orthogonal():
    assert np.isclose(trace_distance(proj(ket(0)), proj(ket(1))), 1.0)


@given(din=st.integers(1, 4), dout=st.integers(1, 4), seed=st.integers(0, 1000))
def test_random_channel_is_trace_preserving(din, dout, seed):
    rng = np.random.default_rng(seed)
    ch = random_channel(din, dout, rng)
    gram = sum(k.T @ k for k in ch.kraus)
    assert np.allclose(gram, np.eye(din))
    assert np.linalg.eigvalsh(ch.choi())[0] > -1e-10


def test_kraus_rejects_trace_increasing():
    with pytest.raises(QmatError):
        KrausMap((2 * np.eye(2),), (2,), (2,))


def test_kraus_apply_places_output_at_first_target():
    rng = np.random.default_rng(2)
    rho = random_state((2, 3), rng)
    ch = random_channel(3, 2, rng)
    out = ch.apply(rho, [1])
    assert out.dims == (2, 2)
    assert np.allclose(ptrace(out.mat, out.dims, [0]), ptrace(rho.mat, rho.dims, [0]))


def test_choi_of_matches_kraus_choi():
    rng = np.random.default_rng(4)
    ch = random_channel(2, 3, rng)
    assert np.allclose(choi_of(ch, 2), ch.choi())


def test_random_povm_sums_to_identity():
    rng = np.random.default_rng(1)
    elems = random_povm(3, 4, rng)
    assert np.allclose(sum(elems), np.eye(3))
    assert all(is_psd(e) for e in elems)


def test_clip_to_state_reports_truncation():
    m = np.diag([1.1, -0.1])
    st_, lost = clip_to_state(m, (2,))
    assert lost > 0
    assert np.isclose(np.trace(st_.mat), 1)


def test_json_roundtrip(tmp_path):
    rng = np.random.default_rng(7)
    rho = random_state((2, 2), rng, field="complex")
    d = to_json_dict(rho)
    assert d["field"] == "complex" and "im" in d
    assert np.allclose(from_json_dict(json.loads(json.dumps(d))).mat, rho.mat)
    path = tmp_path / "s.json"
    dump_state(rho, path)
    assert np.allclose(load_state(path).mat, rho.mat)


def test_json_real_state_has_no_imaginary_part():
    d = to_json_dict(DensityMatrix(np.eye(2) / 2, (2,)))
    assert d["field"] == "real" and "im" not in d


# worked examples --------------------------------------------------------------


def test_tensor_examples():
    assert np.allclose(tensor(np.eye(2), np.eye(2)), np.eye(4))
    p = np.outer(Y_PLUS, Y_PLUS.conj())
    # (|0> + i|1>)/sqrt2 twice: entries i^(k-j) / 4 with k, j the bit counts
    want = np.array([[1, -1j, -1j, -1], [1j, 1, 1, -1j], [1j, 1, 1, -1j], [-1, 1j, 1j, 1]]) / 4
    assert np.allclose(tensor(p, p), want)
    rng = np.random.default_rng(0)
    a, b, c, d = (rng.standard_normal((2, 2)) for _ in range(4))
    assert np.allclose(tensor(a, b) @ tensor(c, d), tensor(a @ c, b @ d))
    with pytest.raises(FieldError):
        tensor(DensityMatrix(np.eye(2) / 2, (2,)), np.eye(2))


def test_partial_trace_examples():
    assert np.allclose(partial_trace(frame_state(3), [0, 1]).mat, frame_state(2).mat)
    assert np.allclose(partial_trace(rho_bar(), [0]).mat, np.eye(2) / 2)
    with pytest.raises(QmatError):
        partial_trace(rho_bar(), [])


def test_partial_transpose_examples():
    rng = np.random.default_rng(1)
    a, b = random_state((2,), rng, field="real"), random_state((3,), rng, field="real")
    assert np.allclose(partial_transpose(tensor(a, b), 0).mat, np.kron(a.mat.T, b.mat))
    assert np.max(np.abs(partial_transpose(rho_bar(), 0).mat - rho_bar().mat)) == pytest.approx(0.5)
    sigma = DensityMatrix((proj(ket(0, 0)) + proj(ket(1, 1))) / 2, (2, 2))
    assert np.allclose(partial_transpose(sigma, 0).mat, sigma.mat)


def test_trace_norm_examples():
    assert trace_norm(np.eye(4)) == pytest.approx(4)
    assert 0.5 * trace_norm(rho_bar().mat - np.eye(4) / 4) == pytest.approx(0.5)
    assert trace_norm(np.zeros((3, 3))) == 0


def test_eigh_examples():
    vals, vecs = eigh(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(vals, [1, 2, 3])
    assert np.allclose(eigh(rho_bar().mat)[0], [0, 0, 0.5, 0.5], atol=1e-12)
    assert np.allclose(eigh(YY)[0], [-1, -1, 1, 1])
    assert np.allclose(YY, np.real(np.kron(SY, SY)))
    with pytest.raises(QmatError):
        eigh(np.array([[0.0, 1.0], [0.0, 0.0]]))


@given(seed=st.integers(0, 2 ** 32 - 1))
def test_eigh_reconstruction(seed):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    m = m + m.conj().T
    vals, vecs = eigh(m)
    assert np.all(np.diff(vals) >= 0)
    assert np.linalg.norm(m - vecs @ np.diag(vals) @ vecs.conj().T) <= 1e-9 * np.linalg.norm(m)


def test_trace_distance_metric_properties():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        a, b, c = (random_state((2, 2), rng, field="complex").mat for _ in range(3))
        ab = trace_distance(a, b)
        assert ab == pytest.approx(trace_distance(b, a), abs=1e-12)
        assert ab <= trace_distance(a, c) + trace_distance(c, b) + 1e-9


@given(seed=st.integers(0, 2 ** 32 - 1), k=st.integers(0, 2))
def test_partial_transpose_is_an_involution(seed, k):
    rho = random_state((2, 3, 2), np.random.default_rng(seed), field="complex")
    twice = ptranspose(ptranspose(rho.mat, rho.dims, k), rho.dims, k)
    assert np.allclose(twice, rho.mat)


def test_data_processing_on_real_channels():
    rng = np.random.default_rng(12)
    for _ in range(500):
        a, b = random_state((2, 2), rng, field="real"), random_state((2, 2), rng, field="real")
        ch = random_channel(4, 4, rng, n_kraus=int(rng.integers(1, 5)), field="real")
        assert trace_distance(ch(a.mat), ch(b.mat)) <= trace_distance(a, b) + 1e-9
