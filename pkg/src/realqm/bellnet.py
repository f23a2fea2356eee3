"""Behaviors, strategies and the three-CHSH Bell functional of the bilocal network.

Index conventions (fixed throughout the package):

* ``P[x, z, a, b, c]`` with ``x`` in 0..2, ``z`` in 0..5;
* ``a`` and ``c`` stored as 0 for outcome +1 and 1 for outcome -1;
* ``b`` in 0..3 encodes the bit pair ``(b1, b2)`` big-endian, ``b = 2 b1 + b2``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .qmat import (SX, SY, SZ, DensityMatrix, QmatError, bell_vectors, from_json_dict,
                   matrix_from_json_dict, proj, tensor, to_json_dict)

N_X, N_Z, N_B = 3, 6, 4
SIGN = np.array([1.0, -1.0])
NS_TOL = 1e-9
POS_TOL = 1e-12
POVM_TOL = 1e-9
SQRT2 = np.sqrt(2.0)
OPTIMUM = 6 * SQRT2
REAL_BOUND = 7.66


class BellError(ValueError):
    pass


def _coefficients() -> np.ndarray:
    """W[b, x, z]: weight of S^b_{xz} in the functional."""
    w = np.zeros((N_B, N_X, N_Z))
    for b in range(N_B):
        b1, b2 = divmod(b, 2)
        s1, s2, s12 = (-1) ** b1, (-1) ** b2, (-1) ** (b1 + b2)
        w[b, 0, 0] = w[b, 0, 1] = s2
        w[b, 1, 0], w[b, 1, 1] = s1, -s1
        w[b, 0, 2] = w[b, 0, 3] = s2
        w[b, 2, 2], w[b, 2, 3] = -s12, s12
        w[b, 1, 4] = w[b, 1, 5] = s1
        w[b, 2, 4], w[b, 2, 5] = -s12, s12
    return w


W = _coefficients()
W.setflags(write=False)

# the three CHSH sub-tests: (Alice settings, Charlie settings)
CHSH_BLOCKS = (((0, 1), (0, 1)), ((0, 2), (2, 3)), ((1, 2), (4, 5)))


def bits(b: int) -> str:
    return f"{b >> 1}{b & 1}"


# ---------------------------------------------------------------------------
# no-signalling


@dataclass(frozen=True)
class Violation:
    constraint: str
    magnitude: float


def ns_check(p, tol: float = NS_TOL) -> list[Violation]:
    """All violated positivity, normalization and no-signalling conditions."""
    p = np.asarray(p, dtype=float)
    out: list[Violation] = []
    if p.shape != (N_X, N_Z, 2, N_B, 2):
        return [Violation(f"shape {p.shape} != (3, 6, 2, 4, 2)", float("inf"))]
    lo = p.min()
    if lo < -tol:
        idx = np.unravel_index(np.argmin(p), p.shape)
        out.append(Violation(f"positivity P[x,z,a,b,c]={idx} >= 0", float(-lo)))
    norm = p.sum(axis=(2, 3, 4))
    for x, z in zip(*np.nonzero(np.abs(norm - 1) > tol)):
        out.append(Violation(f"normalization sum_abc P(.|x={x + 1},z={z + 1}) = 1",
                             float(abs(norm[x, z] - 1))))
    pab = p.sum(axis=4)  # [x, z, a, b]
    for z in range(1, N_Z):
        diff = np.abs(pab[:, z] - pab[:, 0])
        for x, a, b in zip(*np.nonzero(diff > tol)):
            out.append(Violation(
                f"sum_c P(a={SIGN[a]:+.0f},b={bits(b)},c|x={x + 1},z={z + 1}) = same at z=1",
                float(diff[x, a, b])))
    pbc = p.sum(axis=2)  # [x, z, b, c]
    for x in range(1, N_X):
        diff = np.abs(pbc[x] - pbc[0])
        for z, b, c in zip(*np.nonzero(diff > tol)):
            out.append(Violation(
                f"sum_a P(a,b={bits(b)},c={SIGN[c]:+.0f}|x={x + 1},z={z + 1}) = same at x=1",
                float(diff[z, b, c])))
    return out


# ---------------------------------------------------------------------------
# behaviors


@dataclass(frozen=True)
class Behavior:
    p: np.ndarray
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "p", p)
        if self.check:
            if p.size and p.min() < -POS_TOL:
                raise BellError(f"invalid behavior: entry {p.min():.2e} < 0")
            bad = ns_check(p)
            if bad:
                raise BellError("invalid behavior: " + "; ".join(
                    f"{v.constraint} ({v.magnitude:.2e})" for v in bad[:5]))

    @property
    def bob_marginal(self) -> np.ndarray:
        return self.p[0, 0].sum(axis=(0, 2))

    def mix(self, other: "Behavior", lam: float) -> "Behavior":
        return Behavior(lam * self.p + (1 - lam) * other.p)

    def to_json_dict(self) -> dict:
        return {"p": self.p.tolist()}

    @classmethod
    def from_json_dict(cls, d: dict) -> "Behavior":
        try:
            return cls(np.array(d["p"], dtype=float))
        except KeyError as exc:
            raise BellError("behavior JSON needs a 'p' table") from exc

    @classmethod
    def uniform(cls) -> "Behavior":
        return cls(np.full((N_X, N_Z, 2, N_B, 2), 1 / 16))


def no_signalling_box() -> Behavior:
    """Uniform Bob with correlators sign(W) for every b; scores the algebraic maximum 12."""
    return Behavior((1 + np.einsum("a,c,bxz->xzabc", SIGN, SIGN, np.sign(W))) / 16)


def load_behavior(path) -> Behavior:
    with open(path) as fh:
        return Behavior.from_json_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Bell functional


@dataclass(frozen=True)
class BellReport:
    total: float
    per_outcome: np.ndarray  # B_b, shape (4,)
    correlators: np.ndarray  # S^b_{xz}, shape (4, 3, 6)
    bob_marginal: np.ndarray

    def chsh(self) -> np.ndarray:
        """CHSH values (4 outcomes x 3 sub-tests), each at most 2 sqrt2 P(b) quantumly."""
        out = np.zeros((N_B, 3))
        for k, (xs, zs) in enumerate(CHSH_BLOCKS):
            for x in xs:
                for z in zs:
                    out[:, k] += W[:, x, z] * self.correlators[:, x, z]
        return out

    def to_json_dict(self) -> dict:
        return {"total": self.total, "per_outcome": self.per_outcome.tolist(),
                "correlators": self.correlators.tolist()}


def correlators(p: np.ndarray) -> np.ndarray:
    """S[b, x, z] = sum_{a,c} a c P(a, b, c | x, z)."""
    return np.einsum("xzabc,a,c->bxz", np.asarray(p, dtype=float), SIGN, SIGN)


def bell_score(beh: Behavior | np.ndarray) -> BellReport:
    p = beh.p if isinstance(beh, Behavior) else np.asarray(beh, dtype=float)
    s = correlators(p)
    per_b = np.einsum("bxz,bxz->b", W, s)
    return BellReport(float(per_b.sum()), per_b, s, p[0, 0].sum(axis=(0, 2)))


def local_maximum() -> float:
    """Largest score of a deterministic local assignment (brute force)."""
    best = -np.inf
    a_all = np.array(np.meshgrid(*[SIGN] * N_X, indexing="ij")).reshape(N_X, -1).T
    c_all = np.array(np.meshgrid(*[SIGN] * N_Z, indexing="ij")).reshape(N_Z, -1).T
    for b in range(N_B):
        vals = np.einsum("xz,ix,jz->ij", W[b], a_all, c_all)
        best = max(best, float(vals.max()))
    return best


# ---------------------------------------------------------------------------
# strategies


def _check_povm(elems: Sequence[np.ndarray], d: int, what: str) -> tuple[np.ndarray, ...]:
    elems = tuple(np.array(e) for e in elems)
    total = np.zeros((d, d), dtype=np.result_type(*elems))
    for e in elems:
        if e.shape != (d, d):
            raise BellError(f"{what}: element shape {e.shape} but system dimension {d}")
        if np.max(np.abs(e - e.conj().T)) > POVM_TOL:
            raise BellError(f"{what}: element is not Hermitian")
        if np.linalg.eigvalsh(e)[0] < -POVM_TOL:
            raise BellError(f"{what}: element is not PSD")
        total = total + e
    if np.max(np.abs(total - np.eye(d))) > POVM_TOL:
        raise BellError(f"{what}: elements do not sum to the identity")
    for e in elems:
        e.setflags(write=False)
    return elems


def _is_complex(a) -> bool:
    return np.iscomplexobj(a) and np.max(np.abs(np.imag(a)), initial=0.0) > 0


@dataclass(frozen=True)
class Strategy:
    """State on A (x) B (x) C plus measurements; ``sources`` optionally records the
    two source states (dims [d_A, d_B1] and [d_B2, d_C]) whose product is ``state``."""

    field: str
    state: DensityMatrix
    alice: tuple
    bob: tuple
    charlie: tuple
    sources: tuple | None = None

    def __post_init__(self):
        if self.field not in ("real", "complex"):
            raise BellError(f"unknown field {self.field!r}")
        if len(self.state.dims) != 3:
            raise BellError("strategy state must have dims [d_A, d_B, d_C]")
        da, db, dc = self.state.dims
        if len(self.alice) != N_X or len(self.charlie) != N_Z:
            raise BellError("need 3 Alice and 6 Charlie measurements")
        alice = tuple(_check_povm(m, da, f"alice x={x + 1}") for x, m in enumerate(self.alice))
        charlie = tuple(_check_povm(m, dc, f"charlie z={z + 1}") for z, m in enumerate(self.charlie))
        if any(len(m) != 2 for m in alice + charlie):
            raise BellError("Alice and Charlie measurements have two outcomes")
        bob = _check_povm(self.bob, db, "bob")
        if len(bob) != N_B:
            raise BellError("Bob's measurement has four outcomes")
        object.__setattr__(self, "alice", alice)
        object.__setattr__(self, "charlie", charlie)
        object.__setattr__(self, "bob", bob)
        if self.field == "real":
            parts = [self.state.mat, *[e for m in alice + charlie for e in m], *bob]
            if any(_is_complex(x) for x in parts):
                raise BellError("real-field strategy carries complex entries")
        if self.sources is not None:
            s1, s2 = self.sources
            if s1.dims[0] != da or s2.dims[-1] != dc or s1.dims[1] * s2.dims[0] != db:
                raise BellError("source dimensions do not match the strategy state")
            prod = tensor(s1, s2).mat
            if np.max(np.abs(prod - self.state.mat)) > 1e-10:
                raise BellError("state is not the product of the declared sources")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.state.dims

    def to_json_dict(self) -> dict:
        def povm(m):
            return [to_json_dict(e) for e in m]
        out = {"field": self.field, "state": to_json_dict(self.state),
               "alice": [povm(m) for m in self.alice], "bob": povm(self.bob),
               "charlie": [povm(m) for m in self.charlie]}
        if self.sources is not None:
            out["sources"] = [to_json_dict(s) for s in self.sources]
        return out

    @classmethod
    def from_json_dict(cls, d: dict) -> "Strategy":
        def povm(m):
            return tuple(matrix_from_json_dict(e)[0] for e in m)
        try:
            sources = None
            if "sources" in d:
                sources = tuple(from_json_dict(s) for s in d["sources"])
            return cls(d["field"], from_json_dict(d["state"]),
                       tuple(povm(m) for m in d["alice"]), povm(d["bob"]),
                       tuple(povm(m) for m in d["charlie"]), sources)
        except (KeyError, QmatError) as exc:
            raise BellError(f"malformed strategy JSON: {exc}") from exc


def load_strategy(path) -> Strategy:
    with open(path) as fh:
        return Strategy.from_json_dict(json.load(fh))


def conditional_states(state: np.ndarray, dims: Sequence[int], bob: Sequence[np.ndarray]) -> np.ndarray:
    """tau^b = tr_B[(I (x) B^b (x) I) rho], stacked as [b, (A C), (A C)]."""
    da, db, dc = dims
    r = state.reshape(da, db, dc, da, db, dc)
    taus = [np.einsum("akcdBe,Bk->acde", r, e) for e in bob]
    return np.array([t.reshape(da * dc, da * dc) for t in taus])


def behavior_from_strategy(s: Strategy) -> Behavior:
    """Born-rule table P(a,b,c|x,z) = tr[(A_x^a (x) B^b (x) C_z^c) rho]."""
    da, db, dc = s.dims
    taus = conditional_states(s.state.mat, s.dims, s.bob).reshape(N_B, da, dc, da, dc)
    A = np.array([[e for e in m] for m in s.alice])  # [x, a, i, j]
    C = np.array([[e for e in m] for m in s.charlie])  # [z, c, k, l]
    p = np.einsum("bikjl,xaji,zclk->xzabc", taus, A, C, optimize=True)
    return Behavior(np.real(p))


# ---------------------------------------------------------------------------
# the optimal complex strategy

# Charlie's observables are s_z * CHARLIE_BASE[z]; the signs were fixed once by
# exhaustive search over the 64 assignments (see ``search_charlie_signs``).
CHARLIE_SIGNS = (1, 1, 1, 1, 1, 1)
# Bob's Bell-basis labelling: outcome b = (b1, b2) <-> (Z^b1 X^b2 (x) I)|Phi+>
BOB_LABELS = ("phi+", "psi+", "phi-", "psi-")


def _charlie_base() -> list[np.ndarray]:
    r = 1 / SQRT2
    return [(SZ + SX) * r, (SZ - SX) * r, (SZ + SY) * r, (SZ - SY) * r,
            (SX + SY) * r, (SX - SY) * r]


def _two_outcome(obs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    eye = np.eye(obs.shape[0])
    return ((eye + obs) / 2, (eye - obs) / 2)


def _optimal_strategy(signs: Sequence[int]) -> Strategy:
    bv = bell_vectors()
    phi = bv["phi+"].astype(complex)
    src = DensityMatrix.from_pure(phi, (2, 2))
    state = tensor(src, src)  # dims (A, B1, B2, C)
    state = DensityMatrix(state.mat, (2, 4, 2))
    alice = tuple(_two_outcome(o.astype(complex)) for o in (SZ, SX, SY))
    charlie = tuple(_two_outcome(sg * o) for sg, o in zip(signs, _charlie_base()))
    bob = tuple(proj(bv[k].astype(complex)) for k in BOB_LABELS)
    return Strategy("complex", state, alice, bob, charlie, sources=(src, src))


def search_charlie_signs() -> tuple[tuple[int, ...], float]:
    """Exhaustive search over Charlie's 64 sign flips; returns the best and its score."""
    best = (None, -np.inf)
    for k in range(64):
        signs = tuple(1 - 2 * ((k >> (5 - i)) & 1) for i in range(6))
        score = bell_score(behavior_from_strategy(_optimal_strategy(signs))).total
        if score > best[1] + 1e-12:
            best = (signs, score)
    return best


def build_optimal_complex_strategy() -> Strategy:
    """Two Phi+ sources, Bob in the Bell basis, Alice Z/X/Y, Charlie half-angle sums."""
    return _optimal_strategy(CHARLIE_SIGNS)
