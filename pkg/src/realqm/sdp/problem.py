"""Block-diagonal SDPs in standard primal form.

The problem is

    min (or max)  sum_j <C_j, X_j>
    s.t.          sum_j <A_ij, X_j>  (= or <=)  b_i,     X_j in K_j

with each block a PSD matrix, a nonnegative diagonal, or free scalars.
Coefficient matrices are symmetric and stored by their upper triangle, so an
entry (i, j, v) with i < j contributes ``2 v X_ij`` to the inner product,
exactly as in the SDPA sparse format.

Both in-process solvers work on the dual of the equality form,

    max b'y   s.t.   C - sum_i y_i A_i  in  K*,

written as the conic program ``min c'x  s.t.  A x + s = h, s in K`` with
``x = y``. The conic dual variable is the stacked scaled-vectorized ``X``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

PSD, DIAG, FREE = "psd", "diag", "free"
KINDS = (PSD, DIAG, FREE)
OPTIMAL, INACCURATE, INFEASIBLE, UNBOUNDED, ITER_LIMIT = (
    "Optimal", "Inaccurate", "Infeasible", "Unbounded", "IterLimit")
SQRT2 = np.sqrt(2.0)


class SdpError(Exception):
    """Malformed problem or solver failure."""


class CapExceeded(SdpError):
    pass


@dataclass(frozen=True)
class Block:
    name: str
    size: int
    kind: str = PSD

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SdpError(f"unknown block kind {self.kind!r}")
        if self.size < 1:
            raise SdpError(f"block {self.name!r} has size {self.size}")


@dataclass(frozen=True)
class Coeffs:
    """COO table of upper-triangle coefficients: (item, block, row, col, value)."""

    item: np.ndarray
    blk: np.ndarray
    row: np.ndarray
    col: np.ndarray
    val: np.ndarray

    @classmethod
    def empty(cls) -> "Coeffs":
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z, z, z, np.zeros(0))

    @classmethod
    def from_entries(cls, entries: Iterable[tuple[int, int, int, int, float]]) -> "Coeffs":
        arr = list(entries)
        if not arr:
            return cls.empty()
        item, blk, row, col, val = zip(*arr)
        return cls.build(item, blk, row, col, val)

    @classmethod
    def build(cls, item, blk, row, col, val) -> "Coeffs":
        item = np.asarray(item, dtype=np.int64)
        blk = np.asarray(blk, dtype=np.int64)
        row = np.asarray(row, dtype=np.int64)
        col = np.asarray(col, dtype=np.int64)
        val = np.asarray(val, dtype=float)
        lo = np.minimum(row, col)
        hi = np.maximum(row, col)
        return cls(item, blk, lo, hi, val).canonical()

    def canonical(self) -> "Coeffs":
        """Merge duplicates, drop zeros, sort by (item, block, row, col)."""
        if self.item.size == 0:
            return self
        keys = np.stack([self.item, self.blk, self.row, self.col])
        uniq, inv = np.unique(keys, axis=1, return_inverse=True)
        vals = np.zeros(uniq.shape[1])
        np.add.at(vals, inv.ravel(), self.val)
        keep = vals != 0.0
        return Coeffs(uniq[0, keep], uniq[1, keep], uniq[2, keep], uniq[3, keep], vals[keep])

    def __len__(self) -> int:
        return int(self.item.size)

    def select(self, mask) -> "Coeffs":
        return Coeffs(self.item[mask], self.blk[mask], self.row[mask], self.col[mask], self.val[mask])


@dataclass(frozen=True)
class SdpProblem:
    blocks: tuple[Block, ...]
    objective: Coeffs
    constraints: Coeffs
    rhs: np.ndarray
    relations: tuple[str, ...]
    sense: str = "min"
    name: str = "sdp"

    def __post_init__(self):
        if self.sense not in ("min", "max"):
            raise SdpError(f"sense must be 'min' or 'max', got {self.sense!r}")
        rhs = np.asarray(self.rhs, dtype=float)
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "relations", tuple(self.relations))
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if len(self.relations) != rhs.size:
            raise SdpError("one relation per constraint required")
        for rel in self.relations:
            if rel not in ("=", "<="):
                raise SdpError(f"unknown relation {rel!r}")
        nb = len(self.blocks)
        for coeffs, what in ((self.objective, "objective"), (self.constraints, "constraint")):
            if len(coeffs) == 0:
                continue
            if coeffs.blk.min() < 0 or coeffs.blk.max() >= nb:
                raise SdpError(f"{what} references a missing block")
            sizes = np.array([b.size for b in self.blocks])[coeffs.blk]
            if np.any(coeffs.col >= sizes) or np.any(coeffs.row < 0):
                raise SdpError(f"{what} entry outside its block")
            kinds = np.array([b.kind != PSD for b in self.blocks])[coeffs.blk]
            if np.any(kinds & (coeffs.row != coeffs.col)):
                raise SdpError(f"{what} has off-diagonal entries in a diagonal/free block")
        if len(self.constraints) and (self.constraints.item.max() >= rhs.size or self.constraints.item.min() < 0):
            raise SdpError("constraint index out of range")

    @property
    def n_constraints(self) -> int:
        return int(self.rhs.size)

    @property
    def total_side(self) -> int:
        return sum(b.size for b in self.blocks)

    # -- transformations ---------------------------------------------------

    def with_slacks(self) -> "SdpProblem":
        """Turn every ``<=`` row into ``=`` with its own nonnegative slack block."""
        ineq = [i for i, r in enumerate(self.relations) if r == "<="]
        if not ineq:
            return self
        blocks = list(self.blocks)
        extra = []
        for i in ineq:
            blocks.append(Block(f"slack:c{i}", 1, DIAG))
            extra.append((i, len(blocks) - 1, 0, 0, 1.0))
        c = self.constraints
        e = Coeffs.from_entries(extra)
        merged = Coeffs.build(
            np.concatenate([c.item, e.item]), np.concatenate([c.blk, e.blk]),
            np.concatenate([c.row, e.row]), np.concatenate([c.col, e.col]),
            np.concatenate([c.val, e.val]))
        return SdpProblem(tuple(blocks), self.objective, merged, self.rhs,
                          ("=",) * self.n_constraints, self.sense, self.name)

    def coefficient_matrix(self, item: int | None, block: int) -> np.ndarray:
        """Dense symmetric coefficient of one constraint (or the objective if None)."""
        src = self.objective if item is None else self.constraints
        mask = src.blk == block
        if item is not None:
            mask &= src.item == item
        n = self.blocks[block].size
        m = np.zeros((n, n))
        sel = src.select(mask)
        m[sel.row, sel.col] += sel.val
        off = sel.row != sel.col
        m[sel.col[off], sel.row[off]] += sel.val[off]
        return m

    def evaluate_objective(self, xs: Sequence[np.ndarray]) -> float:
        return _inner(self.objective, xs, 1)[0]

    def evaluate_constraints(self, xs: Sequence[np.ndarray]) -> np.ndarray:
        return _inner(self.constraints, xs, self.n_constraints)

    # -- debugging ---------------------------------------------------------

    def to_json_dict(self) -> dict:
        def table(c: Coeffs):
            return [[int(a), int(b), int(r), int(s), float(v)]
                    for a, b, r, s, v in zip(c.item, c.blk, c.row, c.col, c.val)]
        return {
            "name": self.name,
            "sense": self.sense,
            "blocks": [{"name": b.name, "size": b.size, "kind": b.kind} for b in self.blocks],
            "objective": table(self.objective),
            "constraints": table(self.constraints),
            "rhs": self.rhs.tolist(),
            "relations": list(self.relations),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SdpProblem":
        def coeffs(rows):
            return Coeffs.from_entries(tuple(r) for r in rows)
        return cls(tuple(Block(**b) for b in d["blocks"]), coeffs(d["objective"]),
                   coeffs(d["constraints"]), np.array(d["rhs"], dtype=float),
                   tuple(d["relations"]), d["sense"], d.get("name", "sdp"))

    def dump_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)


def _inner(c: Coeffs, xs: Sequence[np.ndarray], n_items: int) -> np.ndarray:
    out = np.zeros(n_items)
    for j, x in enumerate(xs):
        mask = c.blk == j
        if not np.any(mask):
            continue
        sel = c.select(mask)
        x = np.asarray(x)
        vals = x[sel.row, sel.col] if x.ndim == 2 else x[sel.row]
        weight = np.where(sel.row == sel.col, 1.0, 2.0)
        np.add.at(out, sel.item if n_items > 1 else np.zeros_like(sel.item), weight * sel.val * vals)
    return out


class SdpBuilder:
    """Incremental construction of an ``SdpProblem``."""

    def __init__(self, sense: str = "min", name: str = "sdp"):
        self.sense = sense
        self.name = name
        self.blocks: list[Block] = []
        self._obj: list[tuple] = []
        self._con: list[tuple] = []
        self._rhs: list[float] = []
        self._rel: list[str] = []

    def add_block(self, name: str, size: int, kind: str = PSD) -> int:
        self.blocks.append(Block(name, size, kind))
        return len(self.blocks) - 1

    def objective(self, block: int, i: int, j: int, value: float) -> None:
        self._obj.append((0, block, i, j, value))

    def add_constraint(self, entries: Iterable[tuple[int, int, int, float]], rhs: float,
                       relation: str = "=") -> int:
        k = len(self._rhs)
        self._con.extend((k, b, i, j, v) for b, i, j, v in entries)
        self._rhs.append(float(rhs))
        self._rel.append(relation)
        return k

    def build(self) -> SdpProblem:
        return SdpProblem(tuple(self.blocks), Coeffs.from_entries(self._obj),
                          Coeffs.from_entries(self._con), np.array(self._rhs),
                          tuple(self._rel), self.sense, self.name)


def from_lmi(
    blocks: Sequence[Block],
    const: Coeffs,
    coeffs: Coeffs,
    gain: np.ndarray,
    name: str = "lmi",
) -> SdpProblem:
    """Standard-form problem whose dual is the LMI ``max gain'y  s.t.  F0 + sum_k y_k F_k in K``.

    ``const`` holds F0 (item ignored) and ``coeffs`` holds F_k with ``item = k``.
    The optimal value of the returned min-problem equals the LMI maximum, and
    the solver's dual multipliers are the LMI variables ``y``.
    """
    gain = np.asarray(gain, dtype=float)
    obj = Coeffs(np.zeros_like(const.item), const.blk, const.row, const.col, const.val)
    con = Coeffs(coeffs.item, coeffs.blk, coeffs.row, coeffs.col, -coeffs.val)
    return SdpProblem(tuple(blocks), obj.canonical(), con.canonical(), gain,
                      ("=",) * gain.size, "min", name)


# ---------------------------------------------------------------------------
# conic form shared by the solvers


@dataclass
class ConicForm:
    """``min c'x  s.t.  A x + s = h``, s in zero^z x nonneg^l x PSD(sizes)."""

    c: np.ndarray
    A: sp.csc_matrix
    h: np.ndarray
    n_zero: int
    n_nonneg: int
    psd_sizes: list[int]
    # per block: (kind, row offset in the stacked vector, size)
    layout: list[tuple[str, int, int]] = field(default_factory=list)
    sign: float = 1.0  # +1 for min problems, -1 for max problems


def svec_index(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row/col of each svec slot: lower triangle, column-major (SCS order)."""
    rows, cols = [], []
    for j in range(n):
        for i in range(j, n):
            rows.append(i)
            cols.append(j)
    return np.array(rows), np.array(cols)


def _svec_pos(n: int, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    """Position of (i, j), i >= j, in the column-major lower-triangle svec."""
    return j * n - j * (j - 1) // 2 + (i - j)


def svec(m: np.ndarray) -> np.ndarray:
    n = m.shape[0]
    r, c = svec_index(n)
    scale = np.where(r == c, 1.0, SQRT2)
    return m[r, c] * scale


def smat(v: np.ndarray, n: int) -> np.ndarray:
    r, c = svec_index(n)
    scale = np.where(r == c, 1.0, 1 / SQRT2)
    m = np.zeros((n, n))
    m[r, c] = v * scale
    m[c, r] = v * scale
    return m


def to_conic(prob: SdpProblem) -> ConicForm:
    prob = prob.with_slacks()
    sign = 1.0 if prob.sense == "min" else -1.0
    order = ([j for j, b in enumerate(prob.blocks) if b.kind == FREE]
             + [j for j, b in enumerate(prob.blocks) if b.kind == DIAG]
             + [j for j, b in enumerate(prob.blocks) if b.kind == PSD])
    offsets = {}
    layout = [None] * len(prob.blocks)
    off = 0
    for j in order:
        b = prob.blocks[j]
        offsets[j] = off
        width = b.size if b.kind != PSD else b.size * (b.size + 1) // 2
        layout[j] = (b.kind, off, b.size)
        off += width
    n_rows = off

    def rows_vals(c: Coeffs):
        kinds = np.array([b.kind == PSD for b in prob.blocks])
        sizes = np.array([b.size for b in prob.blocks])
        offs = np.array([offsets[j] for j in range(len(prob.blocks))])
        is_psd = kinds[c.blk]
        # upper (row <= col) entry maps to lower-triangle slot (col, row)
        pos = np.where(is_psd, _svec_pos(sizes[c.blk], c.col, c.row), c.row)
        scale = np.where(is_psd & (c.row != c.col), SQRT2, 1.0)
        return offs[c.blk] + pos, c.val * scale

    r, v = rows_vals(prob.constraints)
    A = sp.csc_matrix((v, (r, prob.constraints.item)), shape=(n_rows, prob.n_constraints))
    A.sum_duplicates()
    hr, hv = rows_vals(prob.objective)
    h = np.zeros(n_rows)
    np.add.at(h, hr, sign * hv)
    n_zero = sum(b.size for b in prob.blocks if b.kind == FREE)
    n_nonneg = sum(b.size for b in prob.blocks if b.kind == DIAG)
    psd_sizes = [prob.blocks[j].size for j in order if prob.blocks[j].kind == PSD]
    return ConicForm(-prob.rhs.copy(), A, h, n_zero, n_nonneg, psd_sizes, layout, sign)


def unstack(prob: SdpProblem, cf: ConicForm, z: np.ndarray) -> list[np.ndarray]:
    """Block values from a stacked conic vector (slack blocks dropped)."""
    out = []
    for j in range(len(prob.blocks)):
        kind, off, n = cf.layout[j]
        if kind == PSD:
            out.append(smat(z[off:off + n * (n + 1) // 2], n))
        else:
            out.append(np.array(z[off:off + n]))
    return out


# ---------------------------------------------------------------------------
# solutions


@dataclass
class SdpSolution:
    status: str
    objective: float
    dual_objective: float
    x: list[np.ndarray]
    y: np.ndarray
    residuals: dict[str, float]
    solver: str = ""
    iterations: int = 0
    tol: float = 0.0
    info: dict = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())

    def to_json_dict(self) -> dict:
        return {
            "status": self.status,
            "objective": self.objective,
            "dual_objective": self.dual_objective,
            "residuals": dict(self.residuals),
            "solver": self.solver,
            "iterations": self.iterations,
            "tol": self.tol,
        }


def dual_slack(prob: SdpProblem, y: np.ndarray) -> list[np.ndarray]:
    """S = C - sum_i y_i A_i per block, in the problem's own sense (max negates C)."""
    sign = 1.0 if prob.sense == "min" else -1.0
    out = []
    c = prob.constraints
    for j, b in enumerate(prob.blocks):
        if b.kind == PSD:
            s = sign * prob.coefficient_matrix(None, j)
            sel = c.select(c.blk == j)
            w = sel.val * y[sel.item]
            np.add.at(s, (sel.row, sel.col), -w)
            off = sel.row != sel.col
            np.add.at(s, (sel.col[off], sel.row[off]), -w[off])
        else:
            s = sign * np.diag(prob.coefficient_matrix(None, j)).copy()
            sel = c.select(c.blk == j)
            np.add.at(s, sel.row, -sel.val * y[sel.item])
        out.append(s)
    return out


def residuals(prob: SdpProblem, xs: Sequence[np.ndarray], y: np.ndarray) -> dict[str, float]:
    """Relative primal/dual infeasibility and duality gap of a candidate pair.

    Computed on the problem with ``<=`` rows already slack-converted.
    """
    b = prob.rhs
    ax = prob.evaluate_constraints(xs)
    cone_viol = 0.0
    for blk, x in zip(prob.blocks, xs):
        if blk.kind == PSD:
            cone_viol = max(cone_viol, -np.linalg.eigvalsh(x)[0])
        elif blk.kind == DIAG:
            cone_viol = max(cone_viol, -float(np.min(x)))
    primal = max(np.linalg.norm(ax - b) / (1 + np.linalg.norm(b)), cone_viol)
    slack = dual_slack(prob, y)
    cnorm = max((np.max(np.abs(s)) for s in slack), default=0.0)
    dviol = 0.0
    for blk, s in zip(prob.blocks, slack):
        if blk.kind == PSD:
            dviol = max(dviol, -np.linalg.eigvalsh(s)[0])
        elif blk.kind == DIAG:
            dviol = max(dviol, -float(np.min(s)))
        else:
            dviol = max(dviol, float(np.max(np.abs(s))))
    dual = max(dviol, 0.0) / (1 + cnorm)
    sign = 1.0 if prob.sense == "min" else -1.0
    pobj = sign * prob.evaluate_objective(xs)
    dobj = float(b @ y)
    gap = abs(pobj - dobj) / (1 + abs(pobj))
    return {"primal": float(max(primal, 0.0)), "dual": float(dual), "gap": float(gap)}


def finalize(prob: SdpProblem, xs, y, solver: str, tol: float, iterations: int,
             claimed: str, info: dict | None = None) -> SdpSolution:
    """Build a solution, downgrading a claimed Optimal that misses ``tol``."""
    sprob = prob.with_slacks()
    sign = 1.0 if prob.sense == "min" else -1.0
    res = residuals(sprob, xs, y)
    status = claimed
    if claimed == OPTIMAL and max(res.values()) > tol:
        status = INACCURATE
    nb = len(prob.blocks)
    xs_user = list(xs[:nb])
    return SdpSolution(
        status=status,
        objective=float(prob.evaluate_objective(xs_user)),
        dual_objective=float(sign * (sprob.rhs @ y)),
        x=xs_user,
        y=np.asarray(y, dtype=float),
        residuals=res,
        solver=solver,
        iterations=iterations,
        tol=tol,
        info=info or {},
    )
