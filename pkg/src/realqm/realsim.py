"""Real-quantum simulation of complex quantum theory with an entangled reference frame.

A complex operator ``M = M_re + i M_im`` becomes the real operator
``M_re (x) I + M_im (x) J`` with ``J = [[0, 1], [-1, 0]]`` on one frame rebit.
On the span of the frame vectors

    |R> = (|y+>^n + |y->^n) / sqrt2,      |I> = i (|y+>^n - |y->^n) / sqrt2,

any single-rebit ``J`` acts as ``|I><R| - |R><I|``, which plays the imaginary
unit. Frame rebits always sit after the system factors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .bellnet import Behavior, Strategy
from .qmat import (J, DensityMatrix, KrausMap, QmatError, apply_local, choi_of,
                   permute_subsystems, ptrace)

Y_PLUS = np.array([1.0, 1.0j]) / np.sqrt(2)
Y_MINUS = np.array([1.0, -1.0j]) / np.sqrt(2)
FRAME_CAP = 12
LIFT_CAP = 2 ** 14
TOL = 1e-10


class SimulationError(ValueError):
    pass


def _kron_all(mats):
    out = np.ones((1, 1)) if mats and np.ndim(mats[0]) == 2 else np.ones(1)
    for m in mats:
        out = np.kron(out, m)
    return out


# ---------------------------------------------------------------------------
# frame


@dataclass(frozen=True)
class FrameBasis:
    n: int
    r_vec: np.ndarray
    i_vec: np.ndarray

    @classmethod
    def build(cls, n: int) -> "FrameBasis":
        _check_frame(n)
        plus = _kron_all([Y_PLUS] * n)
        minus = _kron_all([Y_MINUS] * n)
        r = np.real((plus + minus) / np.sqrt(2))
        i = np.real(1j * (plus - minus) / np.sqrt(2))
        return cls(n, r, i)

    @property
    def projector(self) -> np.ndarray:
        return np.outer(self.r_vec, self.r_vec) + np.outer(self.i_vec, self.i_vec)

    @property
    def logical_j(self) -> np.ndarray:
        return np.outer(self.i_vec, self.r_vec) - np.outer(self.r_vec, self.i_vec)


def _check_frame(n: int) -> None:
    if not 1 <= n <= FRAME_CAP:
        raise SimulationError(f"frame size {n} outside 1..{FRAME_CAP}")


def j_on(n: int, k: int) -> np.ndarray:
    """J acting on rebit ``k`` of an ``n``-rebit frame."""
    if not 0 <= k < n:
        raise SimulationError(f"rebit {k} out of range for a {n}-rebit frame")
    return _kron_all([J if i == k else np.eye(2) for i in range(n)])


def frame_state(n: int) -> DensityMatrix:
    """(|y+><y+|^n + |y-><y-|^n) / 2 as a real 2^n x 2^n state."""
    _check_frame(n)
    p = np.outer(Y_PLUS, Y_PLUS.conj())
    m = np.outer(Y_MINUS, Y_MINUS.conj())
    mat = (_kron_all([p] * n) + _kron_all([m] * n)) / 2
    return DensityMatrix(np.real(mat), (2,) * n)


# ---------------------------------------------------------------------------
# lifted states and operators


@dataclass(frozen=True)
class LiftedState:
    carrier: DensityMatrix
    n: int
    dephased: bool = True

    @property
    def sys_dims(self) -> tuple[int, ...]:
        return self.carrier.dims[:len(self.carrier.dims) - self.n]

    def frame_marginal(self) -> np.ndarray:
        k = len(self.sys_dims)
        return ptrace(self.carrier.mat, self.carrier.dims, list(range(k, k + self.n)))

    def system_marginal(self) -> np.ndarray:
        return ptrace(self.carrier.mat, self.carrier.dims, list(range(len(self.sys_dims))))


def _check_lift_size(side: int) -> None:
    if side > LIFT_CAP:
        raise SimulationError(f"lifted dimension {side} exceeds cap {LIFT_CAP}; use a smaller frame")


def lift_state(rho: DensityMatrix, n: int = 1) -> LiftedState:
    """rho_re (x) (|R><R| + |I><I|)/2 + rho_im (x) (|I><R| - |R><I|)/2."""
    _check_frame(n)
    mat = np.asarray(rho.mat)
    if np.max(np.abs(mat - mat.conj().T)) > 1e-10:
        raise SimulationError("cannot lift a non-Hermitian matrix")
    _check_lift_size(mat.shape[0] * 2 ** n)
    fb = FrameBasis.build(n)
    out = np.kron(np.real(mat), fb.projector / 2) + np.kron(np.imag(mat), fb.logical_j / 2)
    return LiftedState(DensityMatrix(out, rho.dims + (2,) * n), n, True)


def unlift(s: LiftedState) -> DensityMatrix:
    """Inverse of ``lift_state`` on dephased states."""
    fb = FrameBasis.build(s.n)
    ds = int(np.prod(s.sys_dims)) if s.sys_dims else 1
    t = s.carrier.mat.reshape(ds, 2 ** s.n, ds, 2 ** s.n)
    re = np.einsum("aibj,ji->ab", t, fb.projector)
    im = np.einsum("aibj,ji->ab", t, fb.logical_j.T)
    return DensityMatrix(re + 1j * im, s.sys_dims or (1,))


def lift_pure_vector(psi: np.ndarray, n: int = 1) -> np.ndarray:
    """psi_re (x) |R> + psi_im (x) |I> (not invariant under global phases)."""
    fb = FrameBasis.build(n)
    psi = np.asarray(psi, dtype=complex)
    return np.kron(psi.real, fb.r_vec) + np.kron(psi.imag, fb.i_vec)


def dephase(mat: np.ndarray, dims: Sequence[int], n: int, rebit: int = 0) -> np.ndarray:
    """(X + J X J^T) / 2 with J on frame rebit ``rebit`` (frame = last ``n`` factors)."""
    dims = tuple(dims)
    k = len(dims) - n + rebit
    jx = apply_local(mat, dims, J, [k])
    return (mat + apply_local(jx.T, dims, J, [k]).T) / 2


@dataclass(frozen=True)
class LiftedOperator:
    matrix: np.ndarray
    re: np.ndarray
    im: np.ndarray


def lift_operator(m: np.ndarray) -> LiftedOperator:
    m = np.asarray(m)
    re, im = np.real(m), np.imag(m)
    return LiftedOperator(np.kron(re, np.eye(2)) + np.kron(im, J), re, im)


def _validate_povm(elems: Sequence[np.ndarray], tol: float = 1e-9) -> list[np.ndarray]:
    elems = [np.asarray(e) for e in elems]
    if not elems:
        raise SimulationError("empty POVM")
    d = elems[0].shape[0]
    for e in elems:
        if e.shape != (d, d) or np.max(np.abs(e - e.conj().T)) > tol:
            raise SimulationError("POVM element is not a Hermitian matrix of the common size")
        if np.linalg.eigvalsh(e)[0] < -tol:
            raise SimulationError("POVM element is not PSD")
    if np.max(np.abs(sum(elems) - np.eye(d))) > tol:
        raise SimulationError("POVM elements do not sum to the identity")
    return elems


def lift_povm(elems: Sequence[np.ndarray]) -> list[LiftedOperator]:
    return [lift_operator(e) for e in _validate_povm(elems)]


# ---------------------------------------------------------------------------
# broadcasting

_P = np.outer(Y_PLUS, Y_PLUS.conj())
_M = np.outer(Y_MINUS, Y_MINUS.conj())
_E0 = np.array([1.0, 0.0])
_E1 = np.array([0.0, 1.0])
BROADCAST_U = np.real(np.kron(_P, np.outer(Y_PLUS, _E0) + np.outer(Y_MINUS, _E1))
                      + np.kron(_M, np.outer(Y_MINUS, _E0) + np.outer(Y_PLUS, _E1)))


def _broadcast_mat(mat: np.ndarray, dims: tuple[int, ...], k: int) -> tuple[np.ndarray, tuple[int, ...]]:
    new_dims = dims + (2,)
    _check_lift_size(int(np.prod(new_dims)))
    big = np.kron(mat, np.diag([1.0, 0.0]))
    last = len(new_dims) - 1
    out = apply_local(big, new_dims, BROADCAST_U, [k, last])
    out = apply_local(out.T, new_dims, BROADCAST_U, [k, last]).T
    return out, new_dims


def broadcast(s: LiftedState | DensityMatrix, site: int) -> LiftedState | DensityMatrix:
    """Copy frame rebit ``site`` onto a fresh rebit appended last (orthogonal U on the pair)."""
    if not np.allclose(BROADCAST_U @ BROADCAST_U.T, np.eye(4), atol=1e-14):
        raise SimulationError("broadcast unitary is not orthogonal")
    if isinstance(s, LiftedState):
        if not 0 <= site < s.n:
            raise SimulationError(f"site {site} out of range for {s.n} frame rebits")
        k = len(s.sys_dims) + site
        out, dims = _broadcast_mat(s.carrier.mat, s.carrier.dims, k)
        return LiftedState(DensityMatrix(out, dims, check=False), s.n + 1, s.dephased)
    if not 0 <= site < len(s.dims):
        raise SimulationError(f"site {site} out of range")
    out, dims = _broadcast_mat(s.mat, s.dims, site)
    return DensityMatrix(out, dims, check=False)


# ---------------------------------------------------------------------------
# measurement simulation


def complex_born(rho: DensityMatrix, elems: Sequence[np.ndarray], subsystems: Sequence[int]):
    """Oracle: probabilities and post-states tr_S(E rho)/p on the unmeasured systems."""
    dims = rho.dims
    rest = [i for i in range(len(dims)) if i not in subsystems]
    probs, posts = [], []
    for e in elems:
        m = apply_local(rho.mat.astype(complex), dims, np.asarray(e, dtype=complex), list(subsystems))
        p = float(np.real(np.trace(m)))
        probs.append(p)
        if rest and p > 1e-14:
            posts.append(DensityMatrix(ptrace(m, dims, rest) / p, tuple(dims[i] for i in rest), check=False))
        else:
            posts.append(None)
    return np.array(probs), posts


def lifted_probabilities(s: LiftedState, elems: Sequence[np.ndarray], subsystems: Sequence[int],
                         host: int = 0) -> np.ndarray:
    """Probabilities from lifted elements with J on frame rebit ``host`` (no broadcast)."""
    subsystems = list(subsystems)
    k = len(s.sys_dims) + host
    out = []
    for op in lift_povm(elems):
        m = apply_local(s.carrier.mat, s.carrier.dims, op.matrix, subsystems + [k])
        out.append(float(np.trace(m)))
    return np.array(out)


def simulate_measurement(s: LiftedState, elems: Sequence[np.ndarray], subsystems: Sequence[int],
                         site: int = 0) -> tuple[np.ndarray, list[LiftedState | None]]:
    """Measure a lifted state without consuming its frame.

    A fresh rebit is broadcast from frame rebit ``site``; the lifted POVM acts
    on (subsystems, fresh rebit), and both are traced out afterwards. Returns
    outcome probabilities and the normalized lifted post-states (None for
    outcomes of probability zero).
    """
    if not s.dephased:
        raise SimulationError("simulate_measurement needs a dephased lifted state")
    subsystems = list(subsystems)
    if not subsystems:
        raise SimulationError("no measured subsystems")
    nsys = len(s.sys_dims)
    if any(not 0 <= i < nsys for i in subsystems):
        raise SimulationError("measured subsystem index out of range")
    ops = lift_povm(elems)
    d_meas = int(np.prod([s.sys_dims[i] for i in subsystems]))
    if ops[0].re.shape[0] != d_meas:
        raise SimulationError(f"POVM acts on dimension {ops[0].re.shape[0]}, subsystems have {d_meas}")
    b = broadcast(s, site)
    dims = b.carrier.dims
    fresh = len(dims) - 1
    keep = [i for i in range(len(dims)) if i not in subsystems and i != fresh]
    new_dims = tuple(dims[i] for i in keep)
    probs, posts = [], []
    for op in ops:
        m = apply_local(b.carrier.mat, dims, op.matrix, subsystems + [fresh])
        p = float(np.trace(m))
        probs.append(p)
        if p > 1e-14:
            post = ptrace(m, dims, keep) / p
            post = (post + post.T) / 2
            posts.append(LiftedState(DensityMatrix(post, new_dims, check=False), s.n, True))
        else:
            posts.append(None)
    return np.array(probs), posts


# ---------------------------------------------------------------------------
# complexification


def complexify(k: KrausMap) -> KrausMap:
    """E_C(X) = E(Re X) + i E(Im X); for real Kraus operators the same operators act on C."""
    if k.field != "real":
        raise SimulationError("complexify expects a real map")
    return KrausMap(tuple(np.asarray(x, dtype=complex) for x in k.kraus), k.in_dims, k.out_dims,
                    k.trace_preserving)


def complexify_and_check_cp(k: KrausMap | Callable[[np.ndarray], np.ndarray], din: int | None = None
                            ) -> tuple[KrausMap | None, float]:
    """Complexified map and the minimum eigenvalue of its Choi matrix.

    ``k`` may also be an arbitrary real-linear map given as a function on
    ``din x din`` matrices (used for non-CP negative controls); then no Kraus
    form is returned.
    """
    if isinstance(k, KrausMap):
        kc = complexify(k)
        choi = kc.choi()
    else:
        if din is None:
            raise SimulationError("din is required for a map given as a function")
        kc = None

        def fc(x):
            return np.asarray(k(np.real(x)), dtype=complex) + 1j * np.asarray(k(np.imag(x)))
        choi = choi_of(fc, din, dtype=complex)
    choi = (choi + choi.conj().T) / 2
    return kc, float(np.linalg.eigvalsh(choi)[0])


# ---------------------------------------------------------------------------
# network simulation


@dataclass(frozen=True)
class Source:
    name: str
    state: DensityMatrix  # one factor per attached party, in ``parties`` order
    parties: tuple[str, ...]


@dataclass(frozen=True)
class Party:
    name: str
    measurements: tuple  # settings x outcomes, acting on the party's systems in source order


@dataclass(frozen=True)
class Network:
    sources: tuple[Source, ...]
    parties: tuple[Party, ...]

    def __post_init__(self):
        names = {p.name for p in self.parties}
        for s in self.sources:
            if len(s.state.dims) != len(s.parties):
                raise SimulationError(f"source {s.name}: one subsystem per attached party required")
            for p in s.parties:
                if p not in names:
                    raise SimulationError(f"source {s.name} feeds unknown party {p}")
        for p in self.parties:
            d = int(np.prod(self.party_dims(p.name)))
            for m in p.measurements:
                _validate_povm(m)
                if np.asarray(m[0]).shape[0] != d:
                    raise SimulationError(f"party {p.name}: measurement dimension mismatch")

    def party_systems(self, name: str) -> list[tuple[int, int]]:
        return [(si, k) for si, s in enumerate(self.sources) for k, p in enumerate(s.parties) if p == name]

    def party_dims(self, name: str) -> list[int]:
        return [self.sources[si].state.dims[k] for si, k in self.party_systems(name)]

    @property
    def table_shape(self) -> tuple[int, ...]:
        return (tuple(len(p.measurements) for p in self.parties)
                + tuple(len(p.measurements[0]) for p in self.parties))


@dataclass(frozen=True)
class AuditEntry:
    actor: str
    operation: str
    touched: tuple[str, ...]  # register labels

    def to_json_dict(self) -> dict:
        return {"actor": self.actor, "operation": self.operation, "touched": list(self.touched)}


@dataclass
class NetworkResult:
    table: np.ndarray
    audit: list[AuditEntry]
    registry: dict  # (party, source) -> register index of the rebit handed over
    labels: list[str]
    source_marginal_error: float
    locality_ok: bool
    source_state: np.ndarray | None = None  # joint state of the source rebits after broadcasting
    behavior: Behavior | None = None


class _Ensemble:
    """Mixed real state as a list of unnormalized pure branches over labelled factors."""

    def __init__(self, branches: list[np.ndarray], labels: list[str], dims: list[int]):
        self.branches = branches
        self.labels = list(labels)
        self.dims = list(dims)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def _tensor(self, v):
        return v.reshape(self.dims)

    def append(self, label: str, dim: int = 2):
        e0 = np.zeros(dim)
        e0[0] = 1.0
        self.branches = [np.kron(v, e0) for v in self.branches]
        self.labels.append(label)
        self.dims.append(dim)

    def apply(self, ops: Sequence[np.ndarray], in_labels: Sequence[str], out_labels: Sequence[str],
              out_dims: Sequence[int]):
        """Apply Kraus operators mapping ``in_labels`` to ``out_labels`` (placed first)."""
        idx = [self.index(lbl) for lbl in in_labels]
        rest = [i for i in range(len(self.labels)) if i not in idx]
        din = int(np.prod([self.dims[i] for i in idx]))
        new = []
        for v in self.branches:
            t = np.transpose(self._tensor(v), idx + rest).reshape(din, -1)
            for k in ops:
                new.append((k @ t).ravel())
        self.labels = list(out_labels) + [self.labels[i] for i in rest]
        self.dims = list(out_dims) + [self.dims[i] for i in rest]
        _check_lift_size(int(np.prod(self.dims)))
        self.branches = new

    def reduced(self, labels: Sequence[str]) -> np.ndarray:
        idx = [self.index(lbl) for lbl in labels]
        rest = [i for i in range(len(self.labels)) if i not in idx]
        d = int(np.prod([self.dims[i] for i in idx]))
        out = np.zeros((d, d))
        for v in self.branches:
            t = np.transpose(self._tensor(v), idx + rest).reshape(d, -1)
            out += t @ t.T
        return out


def _prep_kraus(rho: DensityMatrix) -> list[np.ndarray]:
    """Lifted Kraus operators of the preparation 1 -> rho, using J on the source rebit."""
    vals, vecs = np.linalg.eigh(rho.mat)
    ops = []
    for lam, v in zip(vals, vecs.T):
        if lam > 1e-14:
            kcol = np.sqrt(lam) * v.reshape(-1, 1)
            ops.append(np.kron(np.real(kcol), np.eye(2)) + np.kron(np.imag(kcol), J))
    return ops


def simulate_network(net: Network | Strategy) -> NetworkResult:
    """Run the real model of a complex network experiment.

    Sources share ``frame_state(m)`` (one rebit each), prepare their systems
    with lifted Kraus operators, and broadcast a frame rebit to every attached
    party that has none yet. Parties measure lifted POVMs with ``J`` on their
    own rebit. A ``Strategy`` is wired as the bilocal network and the result
    carries a ``Behavior``.
    """
    strategy = None
    if isinstance(net, Strategy):
        strategy = net
        net = fig1_network(net)
    m = len(net.sources)
    _check_frame(m)
    fb = FrameBasis.build(m)
    src_labels = [f"frame:{s.name}" for s in net.sources]
    ens = _Ensemble([fb.r_vec / np.sqrt(2), fb.i_vec / np.sqrt(2)], src_labels, [2] * m)
    audit: list[AuditEntry] = []
    registry: dict[tuple[str, str], str] = {}

    def log(actor, op, labels):
        audit.append(AuditEntry(actor, op, tuple(labels)))

    for s, lbl in zip(net.sources, src_labels):
        sys_labels = [f"sys:{s.name}:{k}" for k in range(len(s.parties))]
        ens.apply(_prep_kraus(s.state), [lbl], sys_labels + [lbl], list(s.state.dims) + [2])
        log(s.name, "prepare", sys_labels + [lbl])
    for s, lbl in zip(net.sources, src_labels):
        for k, p in enumerate(s.parties):
            if not any(q == p for q, _ in registry):
                fresh = f"frame:{p}"
                ens.append(fresh)
                ens.apply([BROADCAST_U], [lbl, fresh], [lbl, fresh], [2, 2])
                registry[(p, s.name)] = fresh
                log(s.name, "broadcast", [lbl, fresh])
                log(s.name, f"send:{p}", [fresh])
            log(s.name, f"send:{p}", [f"sys:{s.name}:{k}"])
    marg = ens.reduced(src_labels)
    err = float(np.max(np.abs(marg - frame_state(m).mat)))

    # each party: its systems in source order, then its rebit
    blocks, block_dims, ops = [], [], []
    for p in net.parties:
        labels = [f"sys:{net.sources[si].name}:{k}" for si, k in net.party_systems(p.name)]
        rebit = next(v for (q, _), v in registry.items() if q == p.name)
        blocks.append(labels + [rebit])
        block_dims.append(int(np.prod(net.party_dims(p.name))) * 2)
        ops.append(np.array([[lift_operator(e).matrix for e in meas] for meas in p.measurements]))
        log(p.name, "measure", labels + [rebit])
    rho = ens.reduced([lbl for blk in blocks for lbl in blk])
    table = _contract(rho, block_dims, ops)

    locality = _check_locality(audit, {lbl: s.name for lbl, s in zip(src_labels, net.sources)})
    index_of = {k: ens.index(v) for k, v in registry.items()}
    res = NetworkResult(table, audit, index_of, list(ens.labels), err, locality, marg)
    if strategy is not None:
        # table is [x, y_bob, z, a, b, c] with a single Bob setting
        res.behavior = Behavior(table[:, 0, :, :, :, :])
    return res


def _contract(rho: np.ndarray, block_dims: list[int], ops: list[np.ndarray]) -> np.ndarray:
    """P[s_1..s_P, o_1..o_P] = tr[rho (x)_p M_p[s_p, o_p]]."""
    k = len(block_dims)
    t = rho.reshape(block_dims + block_dims)
    letters = iter("ABCDEFGHIJKLMNOPQRSTUVWXYZ")
    rows = [next(letters) for _ in range(k)]
    cols = [next(letters) for _ in range(k)]
    sets = [next(letters).lower() for _ in range(k)]
    outs = [next(letters).lower() for _ in range(k)]
    terms = ["".join(rows + cols)]
    for p in range(k):
        terms.append(sets[p] + outs[p] + cols[p] + rows[p])
    spec = ",".join(terms) + "->" + "".join(sets + outs)
    return np.einsum(spec, t, *ops, optimize=True)


def _check_locality(audit: list[AuditEntry], holders: dict) -> bool:
    """Replay the audit: every operation may touch only registers its actor holds.

    ``holders`` gives the initial holder of each pre-existing register. New
    registers belong to whoever creates them; ``send:<party>`` hands one over.
    """
    holders = dict(holders)
    for e in audit:
        for lbl in e.touched:
            if lbl not in holders and e.operation in ("prepare", "broadcast"):
                holders[lbl] = e.actor
            if holders.get(lbl) != e.actor:
                return False
        if e.operation.startswith("send:"):
            for lbl in e.touched:
                holders[lbl] = e.operation[5:]
    return True


def complex_network_table(net: Network) -> np.ndarray:
    """Oracle: the complex Born-rule table of a network."""
    state = np.ones((1, 1), dtype=complex)
    dims = []
    for s in net.sources:
        state = np.kron(state, s.state.mat)
        dims += list(s.state.dims)
    offsets = np.cumsum([0] + [len(s.state.dims) for s in net.sources])
    order, block_dims, ops = [], [], []
    for p in net.parties:
        sysi = [int(offsets[si] + k) for si, k in net.party_systems(p.name)]
        order += sysi
        block_dims.append(int(np.prod([dims[i] for i in sysi])))
        ops.append(np.array([[np.asarray(e, dtype=complex) for e in meas] for meas in p.measurements]))
    rho = permute_subsystems(state, dims, order)
    return np.real(_contract(rho, block_dims, ops))


def fig1_network(s: Strategy) -> Network:
    """Bilocal wiring: S1 feeds (A, B), S2 feeds (B, C); Bob's element acts on B1 (x) B2."""
    if s.sources is None:
        raise SimulationError("network simulation needs the strategy's two source states")
    s1, s2 = s.sources
    if len(s1.dims) != 2 or len(s2.dims) != 2:
        raise SimulationError("each bilocal source emits exactly two systems")
    return Network(
        (Source("S1", s1.to_complex(), ("A", "B")), Source("S2", s2.to_complex(), ("B", "C"))),
        (Party("A", tuple(s.alice)), Party("B", (tuple(s.bob),)), Party("C", tuple(s.charlie))),
    )


def star_network(states: Sequence[DensityMatrix], leaf_measurements: Sequence, center_measurements) -> Network:
    """m sources, source j feeding leaf L_j and the central party Z."""
    sources = tuple(Source(f"S{j + 1}", st, (f"L{j + 1}", "Z")) for j, st in enumerate(states))
    parties = tuple(Party(f"L{j + 1}", tuple(m)) for j, m in enumerate(leaf_measurements))
    return Network(sources, parties + (Party("Z", tuple(center_measurements)),))


def random_star_network(m: int, rng: np.random.Generator, settings: int = 2) -> Network:
    from .qmat import random_povm, random_state
    states = [random_state((2, 2), rng, field="complex") for _ in range(m)]
    leaves = [[random_povm(2, 2, rng) for _ in range(settings)] for _ in range(m)]
    center = [random_povm(2 ** m, 2, rng) for _ in range(settings)]
    return star_network(states, leaves, center)


__all__ = [
    "BROADCAST_U", "AuditEntry", "FrameBasis", "LiftedOperator", "LiftedState", "Network",
    "NetworkResult", "Party", "SimulationError", "Source", "broadcast", "complex_born",
    "complex_network_table", "complexify", "complexify_and_check_cp", "dephase", "fig1_network",
    "frame_state", "j_on", "lift_operator", "lift_povm", "lift_pure_vector", "lift_state",
    "lifted_probabilities", "random_star_network", "simulate_measurement", "simulate_network",
    "star_network", "unlift", "QmatError",
]
