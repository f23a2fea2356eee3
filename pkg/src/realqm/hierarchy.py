"""Moment-matrix relaxation bounding real-quantum Bell scores under partial source independence.

Variables are moment matrices over (Alice word, Charlie word) pairs: one per
Bob outcome for the sub-normalized states tau^b, one for a separable
reference sigma, and M, N for the trace-distance certificate

    [[G(M), G(tau) - G(sigma)], [., G(N)]] >= 0,   G(M)_00 + G(N)_00 <= 4 eps.

Entries are collapsed to one scalar per equality class at build time. Words
are reduced with X^2 = X only; because every operator and state is real, a
word and its reversal have the same expectation. For tau^b, M and N the
reversal is joint over both parties; for sigma the PPT condition lets each
party reverse independently.

The problem is built as an LMI ``max g'y s.t. F0 + sum y_k F_k >= 0`` and handed
to the SDP solvers through ``from_lmi``; the dual multipliers are the moments.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Sequence

import numpy as np

from .bellnet import N_B, N_X, N_Z, W, Behavior
from .sdp import (DIAG, INFEASIBLE, OPTIMAL, UNBOUNDED, Block, Coeffs, SdpProblem, SdpSolution,
                  export_sdpa, from_lmi, solve_interior_point, solve_splitting)

log = logging.getLogger(__name__)

LEVELS = (1, 2, 3)
PARTIES = {"alice": N_X, "charlie": N_Z}
LETTERS = {"alice": "A", "charlie": "C"}


class HierarchyError(ValueError):
    pass


def reduce_word(word: Sequence[int]) -> tuple[int, ...]:
    """Apply X X = X until no letter repeats immediately."""
    out: list[int] = []
    for w in word:
        if not out or out[-1] != w:
            out.append(w)
    return tuple(out)


@dataclass(frozen=True)
class MonomialBasis:
    party: str
    level: int
    alphabet: tuple[str, ...]
    words: tuple[tuple[int, ...], ...]
    index: dict = field(repr=False, compare=False, default_factory=dict)

    def __len__(self) -> int:
        return len(self.words)

    def label(self, word: Sequence[int]) -> str:
        return "".join(self.alphabet[w - 1] for w in word) or "1"


def build_basis(party: str, level: int) -> MonomialBasis:
    """Reduced words of length <= level over the party's outcome-1 projectors.

    Letters are 1-based setting indices. The empty word comes first, then
    words sorted by (length, lexicographic).
    """
    party = party.lower()
    if party not in PARTIES:
        raise HierarchyError(f"unknown party {party!r}")
    if level not in LEVELS:
        raise HierarchyError(f"level must be one of {LEVELS}, got {level}")
    k = PARTIES[party]
    words = [()]
    frontier = [()]
    for _ in range(level):
        frontier = [w + (a,) for w in frontier for a in range(1, k + 1) if not w or w[-1] != a]
        words += sorted(frontier)
    alphabet = tuple(f"{LETTERS[party]}_{{1|{i}}}" for i in range(1, k + 1))
    return MonomialBasis(party, level, alphabet, tuple(words), {w: i for i, w in enumerate(words)})


def _pair_table(basis: MonomialBasis) -> tuple[np.ndarray, list[tuple[int, ...]]]:
    """Word id of reverse(col) + row for every basis pair, plus the word list."""
    ids: dict[tuple[int, ...], int] = {}
    n = len(basis)
    tab = np.empty((n, n), dtype=np.int64)
    for i, wi in enumerate(basis.words):
        for j, wj in enumerate(basis.words):
            w = reduce_word(wj[::-1] + wi)
            tab[i, j] = ids.setdefault(w, len(ids))
    words = [None] * len(ids)
    for w, i in ids.items():
        words[i] = w
    return tab, words


def _reverse_ids(words: list[tuple[int, ...]]) -> np.ndarray:
    pos = {w: i for i, w in enumerate(words)}
    return np.array([pos[w[::-1]] for w in words], dtype=np.int64)


@dataclass
class MomentProblem:
    """Assembled LMI plus the bookkeeping needed to read results back."""

    level: int
    epsilon: float
    alice: MonomialBasis
    charlie: MonomialBasis
    lmi: SdpProblem
    offset: float  # objective constant from substituted variables
    n_raw: int
    families: dict  # name -> (first raw id, class count)
    raw_to_free: np.ndarray  # raw id -> free variable id or -1 if substituted
    substituted: dict  # raw id -> (constant, [(free id, coef)])
    p_map: dict  # (b, x or None, z or None) -> raw id of the moment
    fixed: bool
    class_keys: dict = field(repr=False, default_factory=dict)

    @property
    def block_sizes(self) -> list[int]:
        return [b.size for b in self.lmi.blocks]

    @property
    def moment_side(self) -> int:
        return len(self.alice) * len(self.charlie)

    @property
    def n_variables(self) -> int:
        return int(self.lmi.n_constraints)

    def raw_values(self, y: np.ndarray) -> np.ndarray:
        out = np.zeros(self.n_raw)
        free = self.raw_to_free >= 0
        out[free] = y[self.raw_to_free[free]]
        for r, (c, terms) in self.substituted.items():
            out[r] = c + sum(coef * y[k] for k, coef in terms)
        return out

    def behavior_from(self, y: np.ndarray) -> np.ndarray:
        """P[x, z, a, b, c] read off the moment variables."""
        m = self.raw_values(y)
        return _assemble_p(lambda b, x, z: m[self.p_map[(b, x, z)]])

    def summary(self) -> dict:
        return {"level": self.level, "eps": self.epsilon, "block_sizes": self.block_sizes,
                "variables": self.n_variables, "alice_words": len(self.alice),
                "charlie_words": len(self.charlie), "fixed_behavior": self.fixed}


def _assemble_p(moment) -> np.ndarray:
    """P from moments m_b(x, z) = <A_x C_z>_b, with None meaning the identity."""
    p = np.zeros((N_X, N_Z, 2, N_B, 2))
    for b, x, z in product(range(N_B), range(N_X), range(N_Z)):
        m0 = moment(b, None, None)
        ma = moment(b, x, None)
        mc = moment(b, None, z)
        mac = moment(b, x, z)
        p[x, z, 0, b, 0] = mac
        p[x, z, 0, b, 1] = ma - mac
        p[x, z, 1, b, 0] = mc - mac
        p[x, z, 1, b, 1] = m0 - ma - mc + mac
    return p


# linear form of P[x,z,a,b,c] in the four moments (m0, ma, mc, mac)
_P_FORM = {(0, 0): (0, 0, 0, 1), (0, 1): (0, 1, 0, -1), (1, 0): (0, 0, 1, -1), (1, 1): (1, -1, -1, 1)}


def build_moment_problem(level: int, epsilon: float, fixed_behavior: Behavior | None = None
                         ) -> MomentProblem:
    """Assemble the relaxation at ``level`` for trace-distance budget ``epsilon``.

    With ``fixed_behavior`` every P entry is pinned and the objective is zero:
    the LMI is then feasible exactly when the behavior passes the relaxation.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise HierarchyError(f"epsilon must lie in [0, 1], got {epsilon}")
    t0 = time.perf_counter()
    alice = build_basis("alice", level)
    charlie = build_basis("charlie", level)
    ta, wa = _pair_table(alice)
    tc, wc = _pair_table(charlie)
    ra, rc = _reverse_ids(wa), _reverse_ids(wc)
    na, nc = len(wa), len(wc)

    # class ids over (Alice word, Charlie word)
    flat = np.arange(na * nc).reshape(na, nc)
    joint = np.minimum(flat, flat[ra][:, rc])
    ca = np.minimum(np.arange(na), ra)
    cc = np.minimum(np.arange(nc), rc)
    indep = flat[ca][:, cc]
    joint_ids, joint_cls = np.unique(joint, return_inverse=True)
    indep_ids, indep_cls = np.unique(indep, return_inverse=True)
    joint_cls = joint_cls.reshape(na, nc)
    indep_cls = indep_cls.reshape(na, nc)
    nj, ns = joint_ids.size, indep_ids.size

    families = {}
    off = 0
    for name, count in [(f"tau{b}", nj) for b in range(N_B)] + [("sigma", ns), ("M", nj), ("N", nj)]:
        families[name] = (off, count)
        off += count
    n_raw = off

    # moment-matrix index (alpha, gamma) -> alpha * |C| + gamma
    da, dc = len(alice), len(charlie)
    side = da * dc
    iu, ju = np.triu_indices(side)
    wa_ij = ta[iu // dc, ju // dc]
    wc_ij = tc[iu % dc, ju % dc]
    jcls = joint_cls[wa_ij, wc_ij]
    scls = indep_cls[wa_ij, wc_ij]

    # full square for the off-diagonal block of the super-block
    ii, jj = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    jcls_full = joint_cls[ta[ii // dc, jj // dc], tc[ii % dc, jj % dc]]
    scls_full = indep_cls[ta[ii // dc, jj // dc], tc[ii % dc, jj % dc]]

    blocks = [Block(f"tau{b}", side) for b in range(N_B)]
    blocks += [Block("sigma", side), Block("trace_distance", 2 * side)]
    n_rows_p = N_X * N_Z * 4 * N_B
    blocks.append(Block("linear", n_rows_p + 1, DIAG))
    b_sigma, b_super, b_lin = N_B, N_B + 1, N_B + 2

    items, blks, rows, cols, vals = [], [], [], [], []

    def add(item, blk, r, c, v):
        n = np.size(r)
        items.append(np.broadcast_to(np.asarray(item, dtype=np.int64), n).copy())
        blks.append(np.full(n, blk, dtype=np.int64))
        rows.append(np.asarray(r, dtype=np.int64).ravel())
        cols.append(np.asarray(c, dtype=np.int64).ravel())
        vals.append(np.broadcast_to(np.asarray(v, dtype=float), n).copy())

    ones = np.ones(iu.size)
    for b in range(N_B):
        add(families[f"tau{b}"][0] + jcls, b, iu, ju, ones)
    add(families["sigma"][0] + scls, b_sigma, iu, ju, ones)
    add(families["M"][0] + jcls, b_super, iu, ju, ones)
    add(families["N"][0] + jcls, b_super, iu + side, ju + side, ones)
    for b in range(N_B):
        add(families[f"tau{b}"][0] + jcls_full, b_super, ii, jj + side, np.ones(ii.size))
    add(families["sigma"][0] + scls_full, b_super, ii, jj + side, -np.ones(ii.size))

    # P positivity and the trace budget on the diagonal block
    empty_a, empty_c = 0, 0

    def moment_id(b, x, z):
        wa_id = ta[0 if x is None else alice.index[(x + 1,)], empty_a]
        wc_id = tc[0 if z is None else charlie.index[(z + 1,)], empty_c]
        return families[f"tau{b}"][0] + int(joint_cls[wa_id, wc_id])

    p_map = {}
    for b in range(N_B):
        for x in [None, *range(N_X)]:
            for z in [None, *range(N_Z)]:
                p_map[(b, x, z)] = moment_id(b, x, z)
    row = 0
    const_items = []
    for x, z, b in product(range(N_X), range(N_Z), range(N_B)):
        ids = (p_map[(b, None, None)], p_map[(b, x, None)], p_map[(b, None, z)], p_map[(b, x, z)])
        for a, c in product(range(2), range(2)):
            for rid, coef in zip(ids, _P_FORM[(a, c)]):
                if coef:
                    add(rid, b_lin, row, row, coef)
            row += 1
    m00 = families["M"][0] + int(joint_cls[ta[0, 0], tc[0, 0]])
    n00 = families["N"][0] + int(joint_cls[ta[0, 0], tc[0, 0]])
    add(m00, b_lin, row, row, -1.0)
    add(n00, b_lin, row, row, -1.0)
    const_items.append((b_lin, row, row, 4.0 * epsilon))

    raw = Coeffs(np.concatenate(items), np.concatenate(blks), np.concatenate(rows),
                 np.concatenate(cols), np.concatenate(vals))

    # objective over raw moments: sum_b,x,z W * (4 m_xz - 2 m_x - 2 m_z + m_0)
    gain_raw = np.zeros(n_raw)
    for b, x, z in product(range(N_B), range(N_X), range(N_Z)):
        w = W[b, x, z]
        if w:
            for key, coef in (((b, x, z), 4.0), ((b, x, None), -2.0), ((b, None, z), -2.0),
                              ((b, None, None), 1.0)):
                gain_raw[p_map[key]] += w * coef

    # substitutions: normalization of tau and sigma, then pinned P moments
    substituted: dict[int, tuple[float, list[tuple[int, float]]]] = {}
    s00 = families["sigma"][0] + int(indep_cls[ta[0, 0], tc[0, 0]])
    substituted[s00] = (1.0, [])
    if fixed_behavior is not None:
        for key, val in _pinned_moments(fixed_behavior).items():
            substituted[p_map[key]] = (val, [])
    else:
        last = p_map[(N_B - 1, None, None)]
        others = [p_map[(b, None, None)] for b in range(N_B - 1)]
        substituted[last] = (1.0, [(r, -1.0) for r in others])
    raw_to_free = np.full(n_raw, -1, dtype=np.int64)
    keep = np.array([r for r in range(n_raw) if r not in substituted], dtype=np.int64)
    raw_to_free[keep] = np.arange(keep.size)
    # express substitution terms in free ids
    subs_free = {r: (c, [(int(raw_to_free[k]), coef) for k, coef in terms])
                 for r, (c, terms) in substituted.items()}

    lmi_items, lmi_blk, lmi_row, lmi_col, lmi_val = [], [], [], [], []
    c_blk, c_row, c_col, c_val = [], [], [], []
    free_mask = raw_to_free[raw.item] >= 0
    lmi_items.append(raw_to_free[raw.item[free_mask]])
    lmi_blk.append(raw.blk[free_mask])
    lmi_row.append(raw.row[free_mask])
    lmi_col.append(raw.col[free_mask])
    lmi_val.append(raw.val[free_mask])
    sub_ids = np.array(sorted(substituted), dtype=np.int64)
    for r in sub_ids:
        mask = raw.item == r
        if not np.any(mask):
            continue
        c, terms = subs_free[int(r)]
        if c:
            c_blk.append(raw.blk[mask])
            c_row.append(raw.row[mask])
            c_col.append(raw.col[mask])
            c_val.append(c * raw.val[mask])
        for k, coef in terms:
            lmi_items.append(np.full(int(mask.sum()), k, dtype=np.int64))
            lmi_blk.append(raw.blk[mask])
            lmi_row.append(raw.row[mask])
            lmi_col.append(raw.col[mask])
            lmi_val.append(coef * raw.val[mask])
    for blk, r, c, v in const_items:
        c_blk.append(np.array([blk]))
        c_row.append(np.array([r]))
        c_col.append(np.array([c]))
        c_val.append(np.array([v]))
    coeffs = Coeffs.build(np.concatenate(lmi_items), np.concatenate(lmi_blk),
                          np.concatenate(lmi_row), np.concatenate(lmi_col), np.concatenate(lmi_val))
    cb = np.concatenate(c_blk)
    const = Coeffs.build(np.zeros(cb.size, dtype=np.int64), cb, np.concatenate(c_row),
                         np.concatenate(c_col), np.concatenate(c_val))

    gain = np.zeros(keep.size)
    offset = 0.0
    if fixed_behavior is None:
        gain = gain_raw[keep].copy()
        for r, (c, terms) in subs_free.items():
            offset += gain_raw[r] * c
            for k, coef in terms:
                gain[k] += gain_raw[r] * coef
    lmi = from_lmi(blocks, const, coeffs, gain, name=f"moment-l{level}-eps{epsilon:g}")
    log.info("built level %d eps %g: %d variables, blocks %s in %.1fs", level, epsilon, keep.size,
             [b.size for b in blocks], time.perf_counter() - t0)
    return MomentProblem(level, float(epsilon), alice, charlie, lmi, offset, n_raw, families,
                         raw_to_free, subs_free, p_map, fixed_behavior is not None,
                         {"tau": nj, "sigma": ns})


def _pinned_moments(beh: Behavior) -> dict:
    """Moments m_b(x, z) implied by a behavior; marginals use x = 0 or z = 0 (NS makes the choice moot)."""
    p = beh.p
    out = {}
    for b in range(N_B):
        out[(b, None, None)] = float(p[0, 0, :, b, :].sum())
        for x in range(N_X):
            out[(b, x, None)] = float(p[x, 0, 0, b, :].sum())
        for z in range(N_Z):
            out[(b, None, z)] = float(p[0, z, :, b, 0].sum())
        for x, z in product(range(N_X), range(N_Z)):
            out[(b, x, z)] = float(p[x, z, 0, b, 0])
    return out


@dataclass
class BoundReport:
    level: int
    eps: float
    bound: float | None
    backend: str
    residuals: dict
    status: str
    feasible: bool | None = None
    path: str | None = None
    elapsed: float = 0.0
    info: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        d = {"level": self.level, "eps": self.eps, "bound": self.bound, "backend": self.backend,
             "residuals": {k: float(v) for k, v in self.residuals.items()}, "status": self.status}
        if self.feasible is not None:
            d["feasible"] = self.feasible
        if self.path is not None:
            d["path"] = self.path
        return d


def solve_hierarchy(mp: MomentProblem, backend: str = "interior", path: str | Path | None = None,
                    tol: float | None = None, **kwargs) -> BoundReport:
    """Bound report for a built problem.

    ``interior`` and ``splitting`` solve in-process (solver errors propagate);
    ``export`` writes an SDPA file to ``path``. In feasibility mode ``feasible``
    is set and ``bound`` is None.
    """
    t0 = time.perf_counter()
    if backend == "export":
        if path is None:
            raise HierarchyError("export needs a path")
        export_sdpa(mp.lmi, path)
        return BoundReport(mp.level, mp.epsilon, None, "export", {}, "Exported", path=str(path),
                           elapsed=time.perf_counter() - t0, info=mp.summary())
    if backend == "interior":
        sol = solve_interior_point(mp.lmi, tol=tol or 1e-8, **kwargs)
    elif backend == "splitting":
        sol = solve_splitting(mp.lmi, tol=tol or 1e-4, **kwargs)
    else:
        raise HierarchyError(f"unknown backend {backend!r}")
    return _report(mp, sol, backend, time.perf_counter() - t0)


def _report(mp: MomentProblem, sol: SdpSolution, backend: str, elapsed: float) -> BoundReport:
    # the LMI is the dual of the standard-form problem: an unbounded standard
    # form certifies an infeasible relaxation
    res = {k: float(v) for k, v in sol.residuals.items()}
    if mp.fixed:
        if sol.status == UNBOUNDED:
            feasible = False
        elif sol.status == OPTIMAL:
            feasible = True
        else:
            feasible = None
        return BoundReport(mp.level, mp.epsilon, None, backend, res, sol.status, feasible,
                           elapsed=elapsed, info={"iterations": sol.iterations})
    bound = None
    if sol.status not in (INFEASIBLE, UNBOUNDED) and np.isfinite(sol.objective):
        bound = float(sol.objective + mp.offset)
    return BoundReport(mp.level, mp.epsilon, bound, backend, res, sol.status, elapsed=elapsed,
                       info={"iterations": sol.iterations, "dual_bound": float(sol.dual_objective + mp.offset)
                             if np.isfinite(sol.dual_objective) else None})


def hierarchy_bound(level: int, eps: float, backend: str = "interior", **kwargs) -> BoundReport:
    return solve_hierarchy(build_moment_problem(level, eps), backend, **kwargs)


def bound_grid(level: int, grid: Sequence[float], backend: str = "interior", **kwargs) -> list[BoundReport]:
    return [hierarchy_bound(level, e, backend, **kwargs) for e in grid]


def moment_check(mp: MomentProblem, y: np.ndarray) -> dict:
    """Largest P-positivity and NS defects of the behavior encoded by ``y``."""
    from .bellnet import ns_check
    p = mp.behavior_from(y)
    worst = max((v.magnitude for v in ns_check(p, tol=0.0)), default=0.0)
    return {"min_p": float(p.min()), "ns": float(worst)}


__all__ = [
    "BoundReport", "HierarchyError", "MomentProblem", "MonomialBasis", "bound_grid",
    "build_basis", "build_moment_problem", "hierarchy_bound", "moment_check", "reduce_word",
    "solve_hierarchy",
]
