"""First-order operator splitting on the homogeneous self-dual embedding.

Follows the ADMM scheme of O'Donoghue, Chu, Parikh and Boyd (SCS), applied to
the conic form ``min c'x  s.t.  A x + s = b, s in K`` produced by
``to_conic``: Ruiz equilibration, one cached factorization of ``I + A'A``,
over-relaxation, and cone projections by eigendecomposition. Infeasibility is
read off the embedding's certificates.
"""

from __future__ import annotations

import logging
import time

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .problem import (INFEASIBLE, ITER_LIMIT, OPTIMAL, UNBOUNDED, SdpError, SdpProblem,
                      SdpSolution, finalize, residuals, smat, svec, to_conic, unstack)

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-4
DIVERGENCE_WINDOW = 1000
DENSE_LIMIT = 4000


class SplittingDivergence(SdpError):
    def __init__(self, msg: str, diagnostics: dict):
        super().__init__(msg)
        self.diagnostics = diagnostics


class _Cones:
    def __init__(self, n_zero: int, n_nonneg: int, psd_sizes: list[int]):
        self.n_zero = n_zero
        self.n_nonneg = n_nonneg
        self.psd = []
        off = n_zero + n_nonneg
        for n in psd_sizes:
            w = n * (n + 1) // 2
            self.psd.append((off, n, w))
            off += w
        self.n_rows = off

    def project_dual(self, y: np.ndarray) -> np.ndarray:
        """Projection onto K*: zero rows free, nonneg clipped, PSD eigen-clipped."""
        out = y.copy()
        a, b = self.n_zero, self.n_zero + self.n_nonneg
        np.maximum(out[a:b], 0.0, out=out[a:b])
        for off, n, w in self.psd:
            out[off:off + w] = _proj_psd(y[off:off + w], n)
        return out

    def groups(self) -> list[slice]:
        """Row groups that must share one scaling factor (a PSD block)."""
        return [slice(off, off + w) for off, _, w in self.psd]


def _proj_psd(v: np.ndarray, n: int) -> np.ndarray:
    m = smat(v, n)
    w, q = np.linalg.eigh(m)
    if w[0] >= 0:
        return v.copy()
    pos = w > 0
    if not np.any(pos):
        return np.zeros_like(v)
    qp = q[:, pos] * w[pos]
    return svec(qp @ q[:, pos].T)


def _equilibrate(A: sp.csr_matrix, cones: _Cones, iters: int = 25):
    m_rows, n_cols = A.shape
    D = np.ones(m_rows)
    E = np.ones(n_cols)
    Aw = A.copy().tocsr()
    groups = cones.groups()
    for _ in range(iters):
        absA = abs(Aw)
        rn = np.sqrt(np.asarray(absA.max(axis=1).todense()).ravel())
        for g in groups:
            rn[g] = np.mean(rn[g]) if np.any(rn[g]) else 1.0
        rn[rn < 1e-8] = 1.0
        cn = np.sqrt(np.asarray(absA.max(axis=0).todense()).ravel())
        cn[cn < 1e-8] = 1.0
        Aw = sp.diags(1 / rn) @ Aw @ sp.diags(1 / cn)
        D /= rn
        E /= cn
    return Aw.tocsc(), D, E


class _KKT:
    """Solves ``[[I, A'], [-A, I]] z = w`` via a factorization of ``I + A'A``."""

    def __init__(self, A: sp.csc_matrix):
        self.A = A
        self.At = A.T.tocsr()
        self.A_csr = A.tocsr()
        n = A.shape[1]
        K = (sp.identity(n, format="csc") + (self.At @ self.A_csr)).tocsc()
        self.dense = None
        self.lu = None
        if n <= DENSE_LIMIT:
            self.dense = sla.cho_factor(K.toarray())
        else:
            try:
                self.lu = spla.splu(K)
            except (RuntimeError, MemoryError):  # fall back to CG
                self.K = K
                self.diag = K.diagonal()
                self.warm = np.zeros(n)

    def _solve_normal(self, r: np.ndarray) -> np.ndarray:
        if self.dense is not None:
            return sla.cho_solve(self.dense, r)
        if self.lu is not None:
            return self.lu.solve(r)
        pre = spla.LinearOperator(self.K.shape, matvec=lambda v: v / self.diag)
        z, _ = spla.cg(self.K, r, x0=self.warm, M=pre, rtol=1e-10, maxiter=200)
        self.warm = z
        return z

    def solve(self, wx: np.ndarray, wy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        zx = self._solve_normal(wx - self.At @ wy)
        zy = wy + self.A_csr @ zx
        return zx, zy


def solve_splitting(prob: SdpProblem, tol: float = DEFAULT_TOL, max_iters: int = 20000,
                    alpha: float = 1.5, check_every: int = 10, verbose: bool = False,
                    time_limit: float | None = None) -> SdpSolution:
    """Solve ``prob`` to relative residuals ``tol``; Inaccurate when ``max_iters`` runs out."""
    sprob = prob.with_slacks()
    cf = to_conic(sprob)
    cones = _Cones(cf.n_zero, cf.n_nonneg, cf.psd_sizes)
    A0 = cf.A.tocsr()
    b0, c0 = cf.h, cf.c
    n, mrows = A0.shape[1], A0.shape[0]

    A, D, E = _equilibrate(A0, cones)
    bh, ch = D * b0, E * c0
    sb = 1.0 / max(np.linalg.norm(bh), 1e-6)
    sc = 1.0 / max(np.linalg.norm(ch), 1e-6)
    sb, sc = np.clip([sb, sc], 1e-4, 1e4)
    bh, ch = bh * sb, ch * sc

    kkt = _KKT(A)
    gx, gy = kkt.solve(ch, bh)
    hg = ch @ gx + bh @ gy

    ux, uy, ut = np.zeros(n), np.zeros(mrows), 1.0
    vx, vy, vt = np.zeros(n), np.zeros(mrows), 1.0
    A0t = A0.T.tocsr()
    nb, nc = np.linalg.norm(b0), np.linalg.norm(c0)

    grow = 0
    last = np.inf
    t0 = time.perf_counter()
    status = ITER_LIMIT
    it = 0
    x = y = None
    for it in range(1, max_iters + 1):
        wx, wy, wt = ux + vx, uy + vy, ut + vt
        zx, zy = kkt.solve(wx, wy)
        tt = (wt + ch @ zx + bh @ zy) / (1 + hg)
        tx, ty = zx - gx * tt, zy - gy * tt
        # over-relaxation
        rx = alpha * tx + (1 - alpha) * ux
        ry = alpha * ty + (1 - alpha) * uy
        rt = alpha * tt + (1 - alpha) * ut
        nx = rx - vx
        ny = cones.project_dual(ry - vy)
        nt = max(rt - vt, 0.0)
        vx = vx - rx + nx
        vy = vy - ry + ny
        vt = vt - rt + nt
        ux, uy, ut = nx, ny, nt

        # unscaled iterates
        xs_ = E * ux / sb
        ys_ = D * uy / sc
        ss_ = vy / D / sb
        kappa = vt
        if ut > 1e-12 * max(1.0, kappa):
            x, y, s = xs_ / ut, ys_ / ut, ss_ / ut
            pres = np.linalg.norm(A0 @ x + s - b0) / (1 + nb)
            dres = np.linalg.norm(A0t @ y + c0) / (1 + nc)
            cx, by = c0 @ x, b0 @ y
            gap = abs(cx + by) / (1 + abs(cx) + abs(by))
            cur = max(pres, dres)
            grow = grow + 1 if cur > last else 0
            last = cur
            if grow >= DIVERGENCE_WINDOW:
                raise SplittingDivergence(
                    f"residuals grew for {grow} consecutive iterations",
                    {"iteration": it, "primal": pres, "dual": dres, "gap": gap, "tau": ut,
                     "kappa": kappa})
            if verbose and it % 100 == 0:
                log.info("it %d pres %.2e dres %.2e gap %.2e", it, pres, dres, gap)
            if max(pres, dres, gap) <= tol and it % check_every == 0:
                xs = unstack(sprob, cf, y)
                if max(residuals(sprob, xs, x).values()) <= tol:
                    status = OPTIMAL
                    break
        # certificates (SCS convention, on unscaled directions)
        by_ = b0 @ ys_
        if by_ < 0:
            if np.linalg.norm(A0t @ ys_) <= tol * -by_:
                status = UNBOUNDED  # conic primal infeasible: standard-form problem unbounded
                break
        cx_ = c0 @ xs_
        if cx_ < 0:
            if np.linalg.norm(A0 @ xs_ + ss_) <= tol * -cx_:
                status = INFEASIBLE
                break
        if time_limit is not None and time.perf_counter() - t0 > time_limit:
            break

    info = {"elapsed": time.perf_counter() - t0, "tau": ut, "kappa": vt}
    if status in (INFEASIBLE, UNBOUNDED):
        nan = float("nan")
        obj = nan if status == INFEASIBLE else (-np.inf if prob.sense == "min" else np.inf)
        return SdpSolution(status, obj, obj, [], np.zeros(prob.n_constraints),
                           {"primal": nan, "dual": nan, "gap": nan}, "splitting", it, tol, info)
    if x is None:
        x = xs_ / max(ut, 1e-300)
        y = ys_ / max(ut, 1e-300)
    xs = unstack(sprob, cf, y)
    # running out of iterations still yields Optimal if the final iterate meets tol
    return finalize(prob, xs, x, "splitting", tol, it, OPTIMAL, info)
