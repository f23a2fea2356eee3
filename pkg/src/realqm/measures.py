"""Distances to separable and product sets, real entanglement of formation,
the linear Bell-score bound, and monotonicity harnesses."""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

import numpy as np
from scipy.optimize import minimize

from .qmat import (I2, SX, SZ, YY, DensityMatrix, KrausMap, bell_vectors, clip_to_state, proj, ptrace,
                   random_channel, random_isometry, random_state, tensor, trace_distance)
from .sdp import Block, Coeffs, SdpProblem, SdpSolution, from_lmi, solve_interior_point

SQRT2 = np.sqrt(2.0)
B_SET_SUP = 7.66
B_ALL_SUP = 6 * SQRT2
B_ALL_INF = -6 * SQRT2
DIND_STARTS = 64
DIND_STEP_TOL = 1e-9


class MeasureError(ValueError):
    pass


def rho_bar() -> DensityMatrix:
    """(Phi- + Psi+)/2 as a two-rebit state; equals frame_state(2)."""
    v = bell_vectors()
    return DensityMatrix((proj(v["phi-"]) + proj(v["psi+"])) / 2, (2, 2))


def bell_state(name: str) -> DensityMatrix:
    return DensityMatrix(proj(bell_vectors()[name]), (2, 2))


def _require_two_rebit(rho: DensityMatrix) -> None:
    if rho.dims != (2, 2):
        raise MeasureError(f"expected a two-rebit state, got dims {rho.dims}")
    if rho.field != "real" and np.max(np.abs(rho.im)) > 1e-12:
        raise MeasureError("expected a real state")


# ---------------------------------------------------------------------------
# D_Sep for two rebits


@dataclass
class SeparabilityResult:
    distance: float
    witness: DensityMatrix
    certificate: SdpSolution
    truncation: float = 0.0


# real, PPT-invariant two-rebit Pauli products (Y never appears)
_PAULI = (I2, SX, SZ)
_SIGMA_TERMS = [np.kron(p, q) for p, q in itertools.product(_PAULI, _PAULI)][1:]


def _sym_basis(n: int) -> list[np.ndarray]:
    out = []
    for i in range(n):
        for j in range(i, n):
            e = np.zeros((n, n))
            e[i, j] = e[j, i] = 1.0
            out.append(e)
    return out


def _entries(m: np.ndarray, item: int, blk: int, out: list) -> None:
    r, c = np.triu_indices(m.shape[0])
    v = m[r, c]
    for i, j, x in zip(r[v != 0], c[v != 0], v[v != 0]):
        out.append((item, blk, int(i), int(j), float(x)))


def dsep_two_rebit(rho: DensityMatrix, tol: float = 1e-9) -> SeparabilityResult:
    """Trace distance from a two-rebit state to the real separable (= PPT) set.

    Solved as the LMI: maximize -(tr M + tr N)/4 over sigma (Pauli-parametrized,
    so unit trace and PT-invariance hold identically) and symmetric M, N, with
    [[M, rho - sigma], [rho - sigma, N]] >= 0 and sigma >= 0.
    """
    _require_two_rebit(rho)
    sol = solve_interior_point(dsep_problem(rho), tol=tol)
    if not sol.x:
        raise MeasureError(f"D_Sep SDP failed: {sol.status} {sol.info}")
    s = sol.y[:len(_SIGMA_TERMS)]
    sigma = (np.eye(4) + sum(c * t for c, t in zip(s, _SIGMA_TERMS))) / 4
    witness, trunc = clip_to_state(sigma, (2, 2))
    value = float(np.clip(-sol.objective, 0.0, 1.0))
    return SeparabilityResult(value, witness, sol, trunc)


def dsep_problem(rho: DensityMatrix) -> SdpProblem:
    """The D_Sep LMI in standard form; its optimal value is minus the distance."""
    _require_two_rebit(rho)
    r = np.real(rho.mat)
    z4 = np.zeros((4, 4))
    blocks = [Block("gap", 8), Block("sigma", 4)]
    const, coeffs = [], []
    delta0 = r - np.eye(4) / 4
    _entries(np.block([[z4, delta0], [delta0, z4]]), 0, 0, const)
    _entries(np.eye(4) / 4, 0, 1, const)
    k = 0
    for t in _SIGMA_TERMS:
        _entries(np.block([[z4, -t / 4], [-t / 4, z4]]), k, 0, coeffs)
        _entries(t / 4, k, 1, coeffs)
        k += 1
    gain = [0.0] * k
    for corner in (0, 1):
        for e in _sym_basis(4):
            big = np.zeros((8, 8))
            sl = slice(4 * corner, 4 * corner + 4)
            big[sl, sl] = e
            _entries(big, k, 0, coeffs)
            gain.append(-np.trace(e) / 4)
            k += 1
    return from_lmi(blocks, Coeffs.from_entries(const), Coeffs.from_entries(coeffs),
                    np.array(gain), name="dsep")


# ---------------------------------------------------------------------------
# D_Ind bracket


def _bloch(v: np.ndarray) -> np.ndarray:
    """Real rebit state from an unconstrained 2-vector (radially squashed into the disk)."""
    n = np.linalg.norm(v)
    if n > 1:
        v = v / n
    return (I2 + v[0] * SX + v[1] * SZ) / 2


def product_distance(rho: np.ndarray, v1: np.ndarray, v2: np.ndarray) -> float:
    return trace_distance(rho, np.kron(_bloch(v1), _bloch(v2)))


@dataclass
class DindBracket:
    lower: float
    upper: float
    best_product: DensityMatrix
    starts: int = DIND_STARTS

    def __iter__(self):
        return iter((self.lower, self.upper))


def dind_upper(rho: DensityMatrix, starts: int = DIND_STARTS, seed: int = 0,
               step_tol: float = DIND_STEP_TOL, max_rounds: int = 50) -> tuple[float, DensityMatrix]:
    """Alternating search over real product states; the maximally mixed state is always tried."""
    r = np.real(rho.mat)
    rng = np.random.default_rng(seed)
    best_val = trace_distance(r, np.eye(4) / 4)
    best = (np.zeros(2), np.zeros(2))
    opts = {"xatol": 1e-10, "fatol": 1e-12, "maxiter": 400}
    for _ in range(starts):
        v1, v2 = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)
        cur = product_distance(r, v1, v2)
        for _ in range(max_rounds):
            v1 = minimize(lambda v: product_distance(r, v, v2), v1, method="Nelder-Mead",
                          options=opts).x
            v2 = minimize(lambda v: product_distance(r, v1, v), v2, method="Nelder-Mead",
                          options=opts).x
            new = product_distance(r, v1, v2)
            done = cur - new < step_tol
            cur = new
            if done:
                break
        if cur < best_val:
            best_val, best = cur, (v1, v2)
    prod = DensityMatrix(np.kron(_bloch(best[0]), _bloch(best[1])), (2, 2))
    return float(best_val), prod


def dind_bounds(rho: DensityMatrix, starts: int = DIND_STARTS, seed: int = 0) -> DindBracket:
    """(lower, upper) bracket on the distance to product states; lower is D_Sep."""
    _require_two_rebit(rho)
    lower = dsep_two_rebit(rho).distance
    upper, prod = dind_upper(rho, starts=starts, seed=seed)
    return DindBracket(lower, upper, prod, starts)


# ---------------------------------------------------------------------------
# entanglement of formation


def binary_entropy(q: float) -> float:
    q = float(np.clip(q, 0.0, 1.0))
    if q in (0.0, 1.0):
        return 0.0
    return float(-q * np.log2(q) - (1 - q) * np.log2(1 - q))


def yy_correlator(rho: DensityMatrix) -> float:
    return float(np.real(np.trace(np.real(rho.mat) @ YY)))


def ef_two_rebit(rho: DensityMatrix) -> float:
    """Real entanglement of formation, H((1 + sqrt(1 - c^2)) / 2) with c = tr(rho Y(x)Y)."""
    _require_two_rebit(rho)
    c = min(abs(yy_correlator(rho)), 1.0)
    return binary_entropy((1 + np.sqrt(1 - c * c)) / 2)


# ---------------------------------------------------------------------------
# pure states


@dataclass(frozen=True)
class PureDistance:
    value: float
    schmidt: np.ndarray
    exact: bool  # False: only an upper bound on D_Sep


def pure_state_sep_distance(psi: DensityMatrix) -> PureDistance:
    """Trace distance from a pure bipartite state to its dephased Schmidt mixture.

    For two qubits this equals c*s with c, s the Schmidt coefficients and is
    D_Sep itself; for larger systems the value is a (valid) upper bound.
    """
    if len(psi.dims) != 2:
        raise MeasureError("expected a bipartite state")
    vals, vecs = np.linalg.eigh(psi.mat)
    if vals[-2] > 1e-9:
        raise MeasureError("input state is not pure")
    vec = vecs[:, -1]
    d1, d2 = psi.dims
    u, s, vh = np.linalg.svd(vec.reshape(d1, d2))
    # the candidate sum_i s_i^2 |u_i v_i><u_i v_i| is separable
    sigma = sum(s[i] ** 2 * np.outer(np.kron(u[:, i], vh[i]), np.kron(u[:, i], vh[i]).conj())
                for i in range(len(s)))
    value = trace_distance(np.outer(vec, vec.conj()), sigma)
    return PureDistance(float(value), s, exact=(d1 == 2 and d2 == 2))


# ---------------------------------------------------------------------------
# linear bound


@dataclass(frozen=True)
class LinearBoundInputs:
    score: float
    b_set_sup: float = B_SET_SUP
    b_all_sup: float = B_ALL_SUP
    b_all_inf: float = B_ALL_INF

    def __post_init__(self):
        if not self.b_all_inf <= self.b_set_sup <= self.b_all_sup:
            raise MeasureError("need B_All_inf <= B_Set_sup <= B_All_sup")


def linear_bound_epsilon(inp: LinearBoundInputs | float) -> float:
    """Lower bound on the distance to the set: max(0, (B - B_Set_sup) / (B_All_sup - B_All_inf))."""
    if not isinstance(inp, LinearBoundInputs):
        inp = LinearBoundInputs(float(inp))
    den = inp.b_all_sup - inp.b_all_inf
    if den == 0:
        raise MeasureError("B_All_sup equals B_All_inf")
    return max(0.0, (inp.score - inp.b_set_sup) / den)


def percent_half_up(value: float, places: int = 1) -> Decimal:
    """value * 100 rounded half-up to ``places`` decimals (display convention)."""
    q = Decimal(1).scaleb(-places)
    return (Decimal(repr(float(value))) * 100).quantize(q, rounding=ROUND_HALF_UP)


# ---------------------------------------------------------------------------
# monotonicity harness


@dataclass
class MonotonicityReport:
    measure: str
    mode: str
    trials: int
    violations: int
    max_violation: float
    values: list = field(default_factory=list, repr=False)


def _measure_fn(name: str):
    if name == "dsep":
        return lambda rho: dsep_two_rebit(rho).distance
    if name == "dind-upper":
        return lambda rho: dind_upper(rho, starts=8)[0]
    raise MeasureError(f"unknown measure {name!r}")


def _local_channel(rng) -> KrausMap:
    return random_channel(2, 2, rng, n_kraus=int(rng.integers(1, 4)), field="real")


def _one_trial(args):
    name, mode, seq = args
    rng = np.random.default_rng(seq)
    rho = random_state((2, 2), rng, field="real")
    if name == "trace-distance":
        other = random_state((2, 2), rng, field="real")
        ch = random_channel(4, 4, rng, n_kraus=3, field="real")
        before = trace_distance(rho.mat, other.mat)
        after = trace_distance(ch(rho.mat), ch(other.mat))
        return before, after
    fn = _measure_fn(name)
    before = fn(rho)
    if mode == "local":
        out = _local_channel(rng).apply(rho, [0])
        out = _local_channel(rng).apply(out, [1])
    elif mode == "replace":
        fixed = random_state((2,), rng, field="real")
        out = tensor(DensityMatrix(ptrace(rho.mat, (2, 2), [0]), (2,)), fixed)
    elif mode == "global":
        u = random_isometry(4, 4, rng, field="real")
        out = DensityMatrix(u @ rho.mat @ u.T, (2, 2), check=False)
        out, _ = clip_to_state(out.mat, (2, 2))
    else:
        raise MeasureError(f"unknown mode {mode!r}")
    return before, fn(out)


def monotonicity_harness(measure: str = "dsep", trials: int = 200, seed: int = 0,
                         mode: str = "local", tol: float = 1e-6, jobs: int = 1) -> MonotonicityReport:
    """Check measure(after) <= measure(before) + tol over random trials.

    ``measure`` is ``dsep``, ``dind-upper`` or ``trace-distance`` (data
    processing under a random real channel on both states of a pair). Each
    trial draws from its own ``SeedSequence`` child, so results do not depend
    on ``jobs``.
    """
    seqs = np.random.SeedSequence(seed).spawn(trials)
    tasks = [(measure, mode, s) for s in seqs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            values = list(ex.map(_one_trial, tasks))
    else:
        values = [_one_trial(t) for t in tasks]
    excess = [after - before for before, after in values]
    viol = sum(e > tol for e in excess)
    return MonotonicityReport(measure, mode, trials, int(viol), float(max(excess, default=0.0)), values)


__all__ = [
    "B_ALL_INF", "B_ALL_SUP", "B_SET_SUP", "DindBracket", "LinearBoundInputs", "MeasureError",
    "MonotonicityReport", "PureDistance", "SeparabilityResult", "binary_entropy", "dind_bounds",
    "dind_upper", "dsep_problem", "dsep_two_rebit", "ef_two_rebit", "linear_bound_epsilon", "monotonicity_harness",
    "percent_half_up", "pure_state_sep_distance", "yy_correlator",
]
