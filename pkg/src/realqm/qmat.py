"""Dense real/complex matrix kernel for multipartite states.

All subsystem bookkeeping is explicit: a ``DensityMatrix`` carries its
``dims`` and every multipartite operation takes subsystem indices.
Factors are ordered big-endian (index 0 is the leftmost Kronecker factor).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Sequence

import numpy as np

HERM_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9
EIGH_SYM_TOL = 1e-8


class QmatError(ValueError):
    """Invalid matrix or state data."""


class FieldError(TypeError):
    """Operands of incompatible kind were combined."""


# ---------------------------------------------------------------------------
# constants

I2 = np.eye(2)
SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SZ = np.array([[1.0, 0.0], [0.0, -1.0]])
SY = np.array([[0.0, -1j], [1j, 0.0]])
# i*sigma_Y, the real rotation that plays the imaginary unit on a frame rebit
J = np.array([[0.0, 1.0], [-1.0, 0.0]])
# sigma_Y (x) sigma_Y is real even though sigma_Y is not
YY = np.real(np.kron(SY, SY))


def ket(*bits: int, dims: Sequence[int] | None = None) -> np.ndarray:
    """Computational basis vector |b0 b1 ...>."""
    dims = tuple(dims) if dims is not None else (2,) * len(bits)
    vec = np.zeros(int(np.prod(dims)))
    vec[np.ravel_multi_index(bits, dims)] = 1.0
    return vec


def proj(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec)
    return np.outer(vec, vec.conj())


def bell_vectors() -> dict[str, np.ndarray]:
    s = 1 / np.sqrt(2)
    return {
        "phi+": s * np.array([1.0, 0, 0, 1]),
        "phi-": s * np.array([1.0, 0, 0, -1]),
        "psi+": s * np.array([0.0, 1, 1, 0]),
        "psi-": s * np.array([0.0, 1, -1, 0]),
    }


# ---------------------------------------------------------------------------
# DensityMatrix


def _is_complex(a: np.ndarray) -> bool:
    return np.iscomplexobj(a)


def _as_matrix(a) -> np.ndarray:
    arr = np.asarray(a)
    if arr.ndim != 2:
        raise QmatError(f"expected a 2-d matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise QmatError("matrix has non-finite entries")
    if _is_complex(arr):
        return arr.astype(np.complex128)
    return arr.astype(np.float64)


@dataclass(frozen=True)
class DensityMatrix:
    """A validated density operator with explicit subsystem dimensions.

    ``mat`` is a float64 array for real-field states and complex128 for
    complex-field states; ``re``/``im`` expose the split used by the real
    simulation model.
    """

    mat: np.ndarray
    dims: tuple[int, ...]
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        mat = _as_matrix(self.mat)
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if not dims or any(d < 1 for d in dims):
            raise QmatError(f"invalid dims {dims}")
        side = int(np.prod(dims))
        if mat.shape != (side, side):
            raise QmatError(f"matrix shape {mat.shape} does not match dims {dims}")
        mat = mat.copy()
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)
        if self.check:
            if np.max(np.abs(mat - mat.conj().T), initial=0.0) > HERM_TOL:
                raise QmatError("density matrix is not Hermitian")
            tr = np.trace(mat)
            if abs(tr - 1.0) > TRACE_TOL:
                raise QmatError(f"density matrix has trace {tr}")
            lo = np.linalg.eigvalsh(mat)[0]
            if lo < -PSD_TOL:
                raise QmatError(f"density matrix has eigenvalue {lo:.3e}")

    @property
    def field(self) -> str:
        return "complex" if _is_complex(self.mat) else "real"

    @property
    def re(self) -> np.ndarray:
        return np.real(self.mat)

    @property
    def im(self) -> np.ndarray:
        return np.imag(self.mat) if _is_complex(self.mat) else np.zeros_like(self.mat)

    @property
    def side(self) -> int:
        return self.mat.shape[0]

    def to_complex(self) -> "DensityMatrix":
        return DensityMatrix(self.mat.astype(np.complex128), self.dims, check=False)

    def expect(self, op: np.ndarray) -> float:
        """Real part of tr(op rho)."""
        return float(np.real(np.einsum("ij,ji->", op, self.mat)))

    @classmethod
    def from_pure(cls, vec, dims: Sequence[int]) -> "DensityMatrix":
        vec = np.asarray(vec)
        vec = vec / np.linalg.norm(vec)
        return cls(proj(vec), tuple(dims))

    @classmethod
    def maximally_mixed(cls, dims: Sequence[int]) -> "DensityMatrix":
        side = int(np.prod(dims))
        return cls(np.eye(side) / side, tuple(dims))


def clip_to_state(mat: np.ndarray, dims: Sequence[int]) -> tuple[DensityMatrix, float]:
    """Project a nearly-valid solver output onto the state set.

    Negative eigenvalues are truncated and the trace renormalized; returns the
    state and the truncated magnitude so callers can log it.
    """
    mat = _as_matrix(mat)
    mat = (mat + mat.conj().T) / 2
    vals, vecs = np.linalg.eigh(mat)
    trunc = float(-vals[vals < 0].sum())
    vals = np.clip(vals, 0.0, None)
    out = (vecs * vals) @ vecs.conj().T
    return DensityMatrix(out / np.trace(out).real, dims), trunc


# ---------------------------------------------------------------------------
# structural operations


def _promote(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if _is_complex(a) or _is_complex(b):
        return a.astype(np.complex128), b.astype(np.complex128)
    return a, b


def tensor(a, b, *rest):
    """Kronecker product of two (or more) states or two plain matrices.

    Real operands are promoted when combined with complex ones. Mixing a
    ``DensityMatrix`` with a bare array raises ``FieldError``.
    """
    if rest:
        return reduce(tensor, rest, tensor(a, b))
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        x, y = _promote(a.mat, b.mat)
        return DensityMatrix(np.kron(x, y), a.dims + b.dims, check=False)
    if isinstance(a, DensityMatrix) or isinstance(b, DensityMatrix):
        raise FieldError("cannot tensor a DensityMatrix with a bare matrix")
    x, y = _promote(np.asarray(a), np.asarray(b))
    return np.kron(x, y)


def _check_indices(indices: Sequence[int], n: int) -> list[int]:
    idx = [int(i) for i in indices]
    if len(set(idx)) != len(idx):
        raise QmatError(f"repeated subsystem index in {idx}")
    for i in idx:
        if not 0 <= i < n:
            raise QmatError(f"subsystem index {i} out of range for {n} subsystems")
    return idx


def ptrace(mat: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Partial trace of a bare matrix, keeping ``keep`` in their original order."""
    dims = tuple(dims)
    n = len(dims)
    keep = sorted(_check_indices(keep, n))
    if not keep:
        raise QmatError("empty keep set; use np.trace for the full trace")
    t = np.asarray(mat).reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # einsum subscripts: row index i, column index i (traced) or n+i (kept)
    letters = [chr(ord("a") + k) for k in range(2 * n)] if 2 * n <= 26 else None
    if letters is None:
        for i in sorted(traced, reverse=True):
            m = t.ndim // 2
            t = np.trace(t, axis1=i, axis2=i + m)
    else:
        rows = [letters[i] for i in range(n)]
        cols = [letters[i] if i in traced else letters[n + i] for i in range(n)]
        out = [letters[i] for i in keep] + [letters[n + i] for i in keep]
        t = np.einsum("".join(rows) + "".join(cols) + "->" + "".join(out), t)
    side = int(np.prod([dims[i] for i in keep]))
    return t.reshape(side, side)


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    mat = ptrace(rho.mat, rho.dims, keep)
    return DensityMatrix(mat, tuple(rho.dims[i] for i in sorted(keep)), check=False)


def ptranspose(mat: np.ndarray, dims: Sequence[int], subsystem: int) -> np.ndarray:
    dims = tuple(dims)
    n = len(dims)
    (k,) = _check_indices([subsystem], n)
    t = np.asarray(mat).reshape(dims + dims)
    axes = list(range(2 * n))
    axes[k], axes[n + k] = axes[n + k], axes[k]
    return t.transpose(axes).reshape(mat.shape)


def partial_transpose(rho: DensityMatrix, subsystem: int) -> DensityMatrix:
    return DensityMatrix(ptranspose(rho.mat, rho.dims, subsystem), rho.dims, check=False)


def permute_subsystems(mat: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: new factor ``k`` is old factor ``order[k]``."""
    dims = tuple(dims)
    n = len(dims)
    order = _check_indices(order, n)
    if len(order) != n:
        raise QmatError("order must be a permutation of all subsystems")
    t = np.asarray(mat).reshape(dims + dims)
    t = t.transpose(order + [n + i for i in order])
    side = mat.shape[0]
    return t.reshape(side, side)


def apply_local(
    mat: np.ndarray,
    dims: Sequence[int],
    op: np.ndarray,
    targets: Sequence[int],
) -> np.ndarray:
    """Left-multiply ``mat`` by ``op`` acting on ``targets`` (identity elsewhere).

    ``op`` may change the joint dimension of the targets only if they are the
    leading factors; the general case keeps dimensions fixed.
    """
    dims = tuple(dims)
    n = len(dims)
    targets = _check_indices(targets, n)
    rest = [i for i in range(n) if i not in targets]
    order = targets + rest
    m = permute_subsystems(mat, dims, order) if order != list(range(n)) else np.asarray(mat)
    dt = int(np.prod([dims[i] for i in targets]))
    dr = int(np.prod([dims[i] for i in rest])) if rest else 1
    if op.shape[1] != dt:
        raise QmatError(f"operator of shape {op.shape} does not act on targets of dim {dt}")
    out = (op @ m.reshape(dt, dr * m.shape[1])).reshape(op.shape[0] * dr, m.shape[1])
    if op.shape[0] != dt:
        return out
    inv = np.argsort(order).tolist()
    pdims = tuple(dims[i] for i in order)
    return permute_subsystems(out, pdims, inv) if order != list(range(n)) else out


def conjugate_local(
    mat: np.ndarray, dims: Sequence[int], op: np.ndarray, targets: Sequence[int]
) -> np.ndarray:
    """op rho op^dagger on ``targets``, dimensions preserved."""
    left = apply_local(mat, dims, op, targets)
    return apply_local(left.conj().T, dims, op, targets).conj().T


# ---------------------------------------------------------------------------
# spectra and norms


def eigh(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric/Hermitian matrix, eigenvalues ascending."""
    m = _as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise QmatError("eigh needs a square matrix")
    scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
    if np.max(np.abs(m - m.conj().T), initial=0.0) > EIGH_SYM_TOL * scale:
        raise QmatError("eigh input is not symmetric/Hermitian")
    return np.linalg.eigh((m + m.conj().T) / 2)


def trace_norm(m) -> float:
    m = m.mat if isinstance(m, DensityMatrix) else _as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise QmatError("trace norm needs a square matrix")
    if np.allclose(m, m.conj().T, atol=1e-13, rtol=0):
        return float(np.abs(np.linalg.eigvalsh((m + m.conj().T) / 2)).sum())
    return float(np.linalg.svd(m, compute_uv=False).sum())


def trace_distance(a, b) -> float:
    x = a.mat if isinstance(a, DensityMatrix) else np.asarray(a)
    y = b.mat if isinstance(b, DensityMatrix) else np.asarray(b)
    return 0.5 * trace_norm(x - y)


def min_eig(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])


def is_psd(m: np.ndarray, tol: float = PSD_TOL) -> bool:
    return min_eig(m) >= -tol


# ---------------------------------------------------------------------------
# channels


@dataclass(frozen=True)
class KrausMap:
    """CP map ``X -> sum_k K_k X K_k^dagger`` between explicit dimensions."""

    kraus: tuple[np.ndarray, ...]
    in_dims: tuple[int, ...]
    out_dims: tuple[int, ...]
    trace_preserving: bool = False

    def __post_init__(self):
        ks = tuple(_as_matrix(k) for k in self.kraus)
        if not ks:
            raise QmatError("KrausMap needs at least one operator")
        din = int(np.prod(self.in_dims))
        dout = int(np.prod(self.out_dims))
        for k in ks:
            if k.shape != (dout, din):
                raise QmatError(f"Kraus operator shape {k.shape} != ({dout}, {din})")
        object.__setattr__(self, "kraus", ks)
        object.__setattr__(self, "in_dims", tuple(self.in_dims))
        object.__setattr__(self, "out_dims", tuple(self.out_dims))
        gram = sum(k.conj().T @ k for k in ks)
        excess = np.linalg.eigvalsh(gram - np.eye(din))
        if excess[-1] > 1e-9:
            raise QmatError("Kraus operators are trace-increasing")
        if self.trace_preserving and np.max(np.abs(excess)) > 1e-9:
            raise QmatError("Kraus operators flagged trace-preserving but are not")

    @property
    def field(self) -> str:
        return "complex" if any(_is_complex(k) for k in self.kraus) else "real"

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return sum(k @ x @ k.conj().T for k in self.kraus)

    def apply(self, rho: DensityMatrix, targets: Sequence[int] | None = None) -> DensityMatrix:
        """Apply to ``targets`` of ``rho``; output factors replace them in place."""
        n = len(rho.dims)
        targets = list(range(n)) if targets is None else _check_indices(targets, n)
        if tuple(rho.dims[i] for i in targets) != self.in_dims:
            raise QmatError("KrausMap input dims do not match the targeted subsystems")
        rest = [i for i in range(n) if i not in targets]
        order = targets + rest
        m = permute_subsystems(rho.mat, rho.dims, order)
        out = 0
        for k in self.kraus:
            big = np.kron(k, np.eye(int(np.prod([rho.dims[i] for i in rest])) if rest else 1))
            out = out + big @ m @ big.conj().T
        new_dims = self.out_dims + tuple(rho.dims[i] for i in rest)
        # put the output block back where the first target sat
        pos = min(targets)
        k_out = len(self.out_dims)
        rest_before = [j for j, i in enumerate(rest) if i < pos]
        rest_after = [j for j, i in enumerate(rest) if i > pos]
        final = [k_out + j for j in rest_before] + list(range(k_out)) + [k_out + j for j in rest_after]
        out = permute_subsystems(out, new_dims, final)
        dims = tuple(new_dims[i] for i in final)
        return DensityMatrix(out, dims, check=False)

    def choi(self) -> np.ndarray:
        """Choi matrix sum_ij |i><j| (x) E(|i><j|) (input factor first)."""
        din = int(np.prod(self.in_dims))
        dout = int(np.prod(self.out_dims))
        dtype = np.complex128 if self.field == "complex" else np.float64
        c = np.zeros((din * dout, din * dout), dtype=dtype)
        for i in range(din):
            for j in range(din):
                e = np.zeros((din, din), dtype=dtype)
                e[i, j] = 1.0
                c[i * dout:(i + 1) * dout, j * dout:(j + 1) * dout] = self(e)
        return c


def choi_of(linear_map: Callable[[np.ndarray], np.ndarray], din: int, dtype=np.float64) -> np.ndarray:
    """Choi matrix of an arbitrary linear map given as a function."""
    blocks = [[None] * din for _ in range(din)]
    for i in range(din):
        for j in range(din):
            e = np.zeros((din, din), dtype=dtype)
            e[i, j] = 1.0
            blocks[i][j] = np.asarray(linear_map(e), dtype=dtype)
    return np.block(blocks)


# ---------------------------------------------------------------------------
# random sampling (Ginibre-style, reproducible under a Generator)


def random_state(
    dims: Sequence[int],
    rng: np.random.Generator,
    field: str = "real",
    rank: int | None = None,
) -> DensityMatrix:
    side = int(np.prod(dims))
    rank = side if rank is None else rank
    g = rng.standard_normal((side, rank))
    if field == "complex":
        g = g + 1j * rng.standard_normal((side, rank))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real, tuple(dims))


def random_pure(dims: Sequence[int], rng: np.random.Generator, field: str = "real") -> DensityMatrix:
    return random_state(dims, rng, field, rank=1)


def random_isometry(din: int, dout: int, rng: np.random.Generator, field: str = "real") -> np.ndarray:
    g = rng.standard_normal((dout, din))
    if field == "complex":
        g = g + 1j * rng.standard_normal((dout, din))
    q, r = np.linalg.qr(g)
    return q * np.sign(np.diag(r).real)


def random_channel(
    din: int, dout: int, rng: np.random.Generator, n_kraus: int = 3, field: str = "real"
) -> KrausMap:
    """Random trace-preserving map from a Stinespring isometry.

    ``n_kraus`` is raised to ``ceil(din / dout)`` when needed for the isometry to exist.
    """
    n_kraus = max(n_kraus, -(-din // dout))
    v = random_isometry(din, dout * n_kraus, rng, field)
    ks = [v[k * dout:(k + 1) * dout] for k in range(n_kraus)]
    return KrausMap(tuple(ks), (din,), (dout,), trace_preserving=True)


def random_povm(d: int, n_out: int, rng: np.random.Generator, field: str = "complex") -> list[np.ndarray]:
    """Random POVM via a random isometry d -> d*n_out."""
    v = random_isometry(d, d * n_out, rng, field)
    return [v[k * d:(k + 1) * d].conj().T @ v[k * d:(k + 1) * d] for k in range(n_out)]


# ---------------------------------------------------------------------------
# JSON


def to_json_dict(rho: DensityMatrix | np.ndarray, dims: Sequence[int] | None = None) -> dict:
    if isinstance(rho, DensityMatrix):
        mat, dims = rho.mat, rho.dims
    else:
        mat = np.asarray(rho)
        dims = tuple(dims) if dims is not None else (mat.shape[0],)
    out = {"dims": list(dims), "field": "complex" if _is_complex(mat) else "real",
           "re": np.real(mat).tolist()}
    if _is_complex(mat):
        out["im"] = np.imag(mat).tolist()
    return out


def matrix_from_json_dict(d: dict) -> tuple[np.ndarray, tuple[int, ...]]:
    try:
        dims = tuple(int(x) for x in d["dims"])
        fld = d["field"]
        re = np.array(d["re"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise QmatError(f"malformed matrix JSON: {exc}") from exc
    if fld not in ("real", "complex"):
        raise QmatError(f"unknown field {fld!r}")
    if fld == "complex":
        if "im" not in d:
            raise QmatError("complex matrix JSON requires 'im'")
        mat = re + 1j * np.array(d["im"], dtype=float)
    else:
        if "im" in d:
            raise QmatError("real matrix JSON must not carry 'im'")
        mat = re
    return mat, dims


def from_json_dict(d: dict) -> DensityMatrix:
    mat, dims = matrix_from_json_dict(d)
    return DensityMatrix(mat, dims)


def load_state(path) -> DensityMatrix:
    with open(path) as fh:
        return from_json_dict(json.load(fh))


def dump_state(rho: DensityMatrix, path) -> None:
    with open(path, "w") as fh:
        json.dump(to_json_dict(rho), fh)
