"""See-saw search for strategies maximizing the Bell functional over a joint state.

One sweep updates, in order: the state (top eigenvector of the Bell operator),
Alice's and Charlie's projective measurements (positive eigenspace of their
conditional operators) and Bob's POVM (an exact SDP). Every step is a global
maximization over one block of variables, so the score never decreases.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bellnet import (N_B, N_X, N_Z, W, BellReport, Strategy, behavior_from_strategy,
                      bell_score)
from .qmat import DensityMatrix, ptrace, random_povm
from .sdp import Block, Coeffs, from_lmi, solve_interior_point

MAX_DIM = 4


@dataclass
class SeesawResult:
    strategy: Strategy
    report: BellReport
    trace: list[float] = field(default_factory=list)
    converged: bool = False
    seed: int = 0

    @property
    def score(self) -> float:
        return self.report.total


def _random_projector(d: int, rng: np.random.Generator, cplx: bool) -> np.ndarray:
    g = rng.standard_normal((d, d))
    if cplx:
        g = g + 1j * rng.standard_normal((d, d))
    q, _ = np.linalg.qr(g)
    rank = int(rng.integers(0, d + 1)) if d == 1 else max(1, d // 2)
    v = q[:, :rank]
    return v @ v.conj().T


def _positive_projector(op: np.ndarray) -> np.ndarray:
    """Projector on the strictly positive eigenspace (zero modes go to the smaller side)."""
    op = (op + op.conj().T) / 2
    vals, vecs = np.linalg.eigh(op)
    scale = max(1.0, np.max(np.abs(vals), initial=0.0))
    keep = vals > 1e-12 * scale
    v = vecs[:, keep]
    return v @ v.conj().T


def _hermitian_basis(d: int, cplx: bool) -> list[np.ndarray]:
    basis = []
    for i in range(d):
        for j in range(i, d):
            e = np.zeros((d, d), dtype=complex if cplx else float)
            e[i, j] = e[j, i] = 1.0
            basis.append(e)
            if cplx and i < j:
                f = np.zeros((d, d), dtype=complex)
                f[i, j], f[j, i] = 1j, -1j
                basis.append(f)
    return basis


def _embed(h: np.ndarray, cplx: bool) -> np.ndarray:
    if not cplx:
        return np.real(h)
    return np.block([[h.real, -h.imag], [h.imag, h.real]])


def _sym_entries(m: np.ndarray, item: int, blk: int) -> list[tuple]:
    n = m.shape[0]
    r, c = np.triu_indices(n)
    vals = m[r, c]
    nz = vals != 0
    return [(item, blk, int(i), int(j), float(v)) for i, j, v in zip(r[nz], c[nz], vals[nz])]


def optimal_povm(ks: Sequence[np.ndarray], cplx: bool) -> list[np.ndarray] | None:
    """argmax over POVMs {E_b} of sum_b tr(K_b E_b), via its SDP dual min tr Y, Y >= K_b.

    Returns None if the solver gives up.
    """
    d = ks[0].shape[0]
    if d == 1:
        vals = [float(np.real(k[0, 0])) for k in ks]
        best = int(np.argmax(vals))
        return [np.full((1, 1), 1.0 if b == best else 0.0, dtype=ks[0].dtype) for b in range(len(ks))]
    basis = _hermitian_basis(d, cplx)
    n = 2 * d if cplx else d
    blocks = [Block(f"bob{b}", n) for b in range(len(ks))]
    const, coeffs = [], []
    for b, k in enumerate(ks):
        const += _sym_entries(-_embed(k, cplx), 0, b)
        for idx, e in enumerate(basis):
            coeffs += _sym_entries(_embed(e, cplx), idx, b)
    gain = np.array([-np.trace(e).real for e in basis])
    prob = from_lmi(blocks, Coeffs.from_entries(const), Coeffs.from_entries(coeffs), gain,
                    name="bob-povm")
    sol = solve_interior_point(prob, tol=1e-9)
    if not sol.x:
        return None
    elems = []
    for x in sol.x:
        if cplx:
            e = x[:d, :d] + x[d:, d:] + 1j * (x[d:, :d] - x[:d, d:])
        else:
            e = x
        e = (e + e.conj().T) / 2
        vals, vecs = np.linalg.eigh(e)
        elems.append((vecs * np.clip(vals, 0, None)) @ vecs.conj().T)
    total = sum(elems)
    vals, vecs = np.linalg.eigh(total)
    inv_sqrt = (vecs / np.sqrt(vals)) @ vecs.conj().T
    return [inv_sqrt @ e @ inv_sqrt for e in elems]


class _State:
    def __init__(self, dims, cplx, alice, bob, charlie):
        self.dims = tuple(dims)
        self.cplx = cplx
        self.alice = alice  # projectors for outcome +1
        self.bob = bob
        self.charlie = charlie
        self.psi = None

    def observables(self):
        ea = np.eye(self.dims[0])
        ec = np.eye(self.dims[2])
        return [2 * p - ea for p in self.alice], [2 * p - ec for p in self.charlie]

    def bell_operator(self) -> np.ndarray:
        ax, cz = self.observables()
        t = np.einsum("bxz,xij,zkl->bijkl", W, np.array(ax), np.array(cz))
        full = np.einsum("bijkl,bBD->iBkjDl", t, np.array(self.bob))
        n = int(np.prod(self.dims))
        return full.reshape(n, n)

    def score(self) -> float:
        op = self.bell_operator()
        return float(np.real(self.psi.conj() @ op @ self.psi))

    def rho(self) -> np.ndarray:
        return np.outer(self.psi, self.psi.conj())

    def update_state(self):
        vals, vecs = np.linalg.eigh(self.bell_operator())
        self.psi = vecs[:, -1]

    def update_alice(self):
        ax, cz = self.observables()
        rho = self.rho()
        for x in range(N_X):
            k = sum(W[b, x, z] * np.kron(self.bob[b], cz[z])
                    for b in range(N_B) for z in range(N_Z) if W[b, x, z])
            op = ptrace(np.kron(np.eye(self.dims[0]), k) @ rho, self.dims, [0])
            self.alice[x] = _positive_projector(op)

    def update_charlie(self):
        ax, cz = self.observables()
        rho = self.rho()
        for z in range(N_Z):
            k = sum(W[b, x, z] * np.kron(ax[x], self.bob[b])
                    for b in range(N_B) for x in range(N_X) if W[b, x, z])
            op = ptrace(np.kron(k, np.eye(self.dims[2])) @ rho, self.dims, [2])
            self.charlie[z] = _positive_projector(op)

    def update_bob(self):
        ax, cz = self.observables()
        da, db, dc = self.dims
        psi = self.psi.reshape(da, db, dc)
        ks = []
        for b in range(N_B):
            t = sum(W[b, x, z] * np.kron(ax[x], cz[z])
                    for x in range(N_X) for z in range(N_Z) if W[b, x, z])
            t = t.reshape(da, dc, da, dc)
            kb = np.einsum("aBc,acde,dDe->DB", psi.conj(), t, psi)
            ks.append((kb + kb.conj().T) / 2 if self.cplx else np.real(kb + kb.T) / 2)
        new = optimal_povm(ks, self.cplx)
        if new is not None:  # a failed solve leaves Bob unchanged
            self.bob = new

    def strategy(self, fld: str) -> Strategy:
        da, _, dc = self.dims
        state = DensityMatrix(self.rho(), self.dims, check=False)
        state = DensityMatrix((state.mat + state.mat.conj().T) / 2 / np.trace(state.mat).real, self.dims)
        alice = tuple((p, np.eye(da) - p) for p in self.alice)
        charlie = tuple((p, np.eye(dc) - p) for p in self.charlie)
        return Strategy(fld, state, alice, tuple(self.bob), charlie)


def seesaw(fld: str = "complex", dims: Sequence[int] = (2, 2, 2), seed: int = 0,
           iters: int = 200, tol: float = 1e-10, patience: int = 3) -> SeesawResult:
    """Alternating maximization from a seeded random start.

    ``converged`` is False when ``iters`` sweeps ran out before the score
    stabilized; the best (last) iterate is returned either way.
    """
    if fld not in ("real", "complex"):
        raise ValueError(f"unknown field {fld!r}")
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or any(d < 1 or d > MAX_DIM for d in dims):
        raise ValueError(f"dims must be three values in 1..{MAX_DIM}, got {dims}")
    cplx = fld == "complex"
    rng = np.random.default_rng(seed)
    alice = [_random_projector(dims[0], rng, cplx) for _ in range(N_X)]
    charlie = [_random_projector(dims[2], rng, cplx) for _ in range(N_Z)]
    bob = random_povm(dims[1], N_B, rng, field=fld)
    st = _State(dims, cplx, alice, [np.asarray(e) for e in bob], charlie)
    st.update_state()
    trace = [st.score()]
    calm = 0
    converged = False
    for _ in range(iters):
        for step in (st.update_alice, st.update_charlie, st.update_bob, st.update_state):
            saved = (list(st.alice), list(st.charlie), list(st.bob), st.psi)
            before = st.score()
            step()
            if st.score() < before:  # guard against round-off in the Bob SDP
                st.alice, st.charlie, st.bob, st.psi = saved
        trace.append(st.score())
        calm = calm + 1 if trace[-1] - trace[-2] <= tol else 0
        if calm >= patience:
            converged = True
            break
    strat = st.strategy(fld)
    report = bell_score(behavior_from_strategy(strat))
    return SeesawResult(strat, report, trace, converged, seed)


def _run(args):
    return seesaw(*args)


def seesaw_best(fld: str = "complex", dims: Sequence[int] = (2, 2, 2), seeds: Sequence[int] = range(50),
                iters: int = 200, jobs: int = 1) -> tuple[SeesawResult, list[SeesawResult]]:
    """Run one see-saw per seed and return (best, all results)."""
    tasks = [(fld, tuple(dims), int(s), iters) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run, tasks))
    else:
        results = [_run(t) for t in tasks]
    best = max(results, key=lambda r: r.score)
    return best, results
