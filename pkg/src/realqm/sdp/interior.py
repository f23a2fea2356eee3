"""Dense primal-dual interior-point backend (cvxopt's conelp with NT scaling)."""

from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp

from .problem import (INACCURATE, INFEASIBLE, ITER_LIMIT, OPTIMAL, UNBOUNDED, CapExceeded,
                      SdpError, SdpProblem, SdpSolution, finalize, smat, svec, svec_index,
                      to_conic, unstack)

log = logging.getLogger(__name__)

DEFAULT_CAP = 600
DEFAULT_TOL = 1e-8


def _spmatrix(m: sp.spmatrix, n_rows: int, n_cols: int):
    from cvxopt import spmatrix
    coo = sp.coo_matrix(m)
    return spmatrix(coo.data.tolist(), coo.row.tolist(), coo.col.tolist(), (n_rows, n_cols))


def solve_interior_point(prob: SdpProblem, tol: float = DEFAULT_TOL, cap: int = DEFAULT_CAP,
                         max_iters: int = 100, verbose: bool = False) -> SdpSolution:
    """Solve ``prob`` with a path-following method on its conic dual.

    Raises ``CapExceeded`` when the summed block side exceeds ``cap``.
    """
    from cvxopt import matrix, solvers

    if prob.total_side > cap:
        raise CapExceeded(
            f"problem has total block side {prob.total_side} > cap {cap}; "
            "use solve_splitting or export_sdpa instead")
    sprob = prob.with_slacks()
    cf = to_conic(sprob)
    m = sprob.n_constraints
    A = cf.A.tocsr()

    # rows of the stacked conic vector: zero | nonneg | psd(svec)
    nz, nl = cf.n_zero, cf.n_nonneg
    A_zero = A[:nz]
    G_rows, h_rows = [A[nz:nz + nl]], [cf.h[nz:nz + nl]]
    off = nz + nl
    for n in cf.psd_sizes:
        width = n * (n + 1) // 2
        blk = A[off:off + width].tocoo()
        hb = cf.h[off:off + width]
        G_rows.append(_svec_rows_to_full(blk, n, m))
        h_rows.append(_svec_vec_to_full(hb, n))
        off += width
    G = sp.vstack(G_rows, format="csr") if G_rows else sp.csr_matrix((0, m))
    h = np.concatenate(h_rows) if h_rows else np.zeros(0)
    dims = {"l": nl, "q": [], "s": list(cf.psd_sizes)}

    kwargs = {}
    if nz:
        kwargs = {"A": _spmatrix(A_zero, nz, m), "b": matrix(cf.h[:nz])}
    args = (matrix(cf.c), _spmatrix(G, G.shape[0], m), matrix(h), dims)
    best = None
    err = None
    # cvxopt sometimes stalls near degenerate optima when pushed past attainable accuracy;
    # retry with looser stopping rules and keep the iterate with the smallest residual
    for scale in (0.1, 1.0, 10.0, 1e3):
        opts = {"show_progress": verbose, "maxiters": max_iters,
                "abstol": tol * scale, "reltol": tol * scale, "feastol": tol * scale}
        res = None
        # Cholesky on the reduced system is much faster than QR; QR survives rank loss
        for kkt in ("chol", "qr"):
            try:
                res = solvers.conelp(*args, options=opts, kktsolver=kkt, **kwargs)
                break
            except (ValueError, ArithmeticError) as exc:
                log.info("interior point (%s) failed at tolerance %.1e: %s", kkt, tol * scale, exc)
                err = exc
        if res is None:
            continue
        sol = _extract(prob, sprob, cf, res, nz, nl, tol, max_iters)
        if sol.status in (OPTIMAL, INFEASIBLE, UNBOUNDED):
            return sol
        if best is None or not best.x or (sol.x and sol.max_residual < best.max_residual):
            best = sol
    if best is None:
        best = _certificate(prob, INACCURATE, 0, tol)
        best.info["error"] = str(err)
    return best


def _extract(prob, sprob, cf, res, nz, nl, tol, max_iters) -> SdpSolution:
    status = res["status"]
    iters = int(res.get("iterations", 0))
    if status == "primal infeasible":
        # the LMI side is infeasible: the standard-form problem is unbounded
        return _certificate(prob, UNBOUNDED, iters, tol)
    if status == "dual infeasible":
        return _certificate(prob, INFEASIBLE, iters, tol)
    if res["x"] is None or res["z"] is None:
        return _certificate(prob, ITER_LIMIT, iters, tol)

    y = np.array(res["x"]).ravel()
    z = np.array(res["z"]).ravel()
    nu = np.array(res["y"]).ravel() if nz else np.zeros(0)
    stacked = np.zeros(cf.A.shape[0])
    stacked[:nz] = nu
    stacked[nz:nz + nl] = z[:nl]
    zo, so = nl, nz + nl
    for n in cf.psd_sizes:
        full = z[zo:zo + n * n].reshape(n, n, order="F")
        full = np.tril(full) + np.tril(full, -1).T
        width = n * (n + 1) // 2
        stacked[so:so + width] = svec(full)
        zo += n * n
        so += width
    xs = unstack(sprob, cf, stacked)
    # cvxopt may stop with "unknown" on a perfectly good iterate; the residual check decides
    sol = finalize(prob, xs, y, "interior", tol, iters, OPTIMAL, {"cvxopt_status": status})
    if sol.status != OPTIMAL and iters >= max_iters:
        sol.status = ITER_LIMIT
    return sol


def _certificate(prob: SdpProblem, status: str, iters: int, tol: float) -> SdpSolution:
    nan = float("nan")
    obj = {INFEASIBLE: nan, UNBOUNDED: -np.inf if prob.sense == "min" else np.inf}.get(status, nan)
    return SdpSolution(status=status, objective=obj, dual_objective=obj,
                       x=[], y=np.zeros(prob.n_constraints),
                       residuals={"primal": nan, "dual": nan, "gap": nan},
                       solver="interior", iterations=iters, tol=tol)


def _svec_rows_to_full(blk: sp.coo_matrix, n: int, m: int) -> sp.csr_matrix:
    """Map svec-indexed rows to column-major n*n rows (lower triangle, unscaled)."""
    r, c = svec_index(n)
    scale = np.where(r == c, 1.0, 1 / np.sqrt(2.0))
    full_row = c * n + r  # column-major position of (r, c), r >= c
    rows = full_row[blk.row]
    vals = blk.data * scale[blk.row]
    # cvxopt reads the lower triangle only, but a symmetric copy keeps the data honest
    mirror = r[blk.row] != c[blk.row]
    rows2 = (r * n + c)[blk.row][mirror]
    return sp.csr_matrix((np.concatenate([vals, vals[mirror]]),
                          (np.concatenate([rows, rows2]), np.concatenate([blk.col, blk.col[mirror]]))),
                         shape=(n * n, m))


def _svec_vec_to_full(v: np.ndarray, n: int) -> np.ndarray:
    return smat(v, n).ravel(order="F")

