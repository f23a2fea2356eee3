"""SDPA sparse (``.dat-s``) export and import.

SDPA's dual form is ``max <F0, Y>  s.t.  <F_i, Y> = c_i, Y psd``, which is our
standard form with ``F_i = A_i``, ``c_i = b_i`` and ``F0 = C`` (max) or
``F0 = -C`` (min). The file carries no sense marker, so ``read_sdpa`` takes
the sense from the caller.

Free-scalar blocks have no SDPA counterpart and are written as a diagonal
block of twice the size holding ``x+`` and ``x-``; such problems re-import as
the equivalent split problem, not the original.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .problem import DIAG, FREE, PSD, Block, Coeffs, SdpError, SdpProblem


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _split_free(prob: SdpProblem) -> SdpProblem:
    if not any(b.kind == FREE for b in prob.blocks):
        return prob
    blocks = [Block(b.name, 2 * b.size, DIAG) if b.kind == FREE else b for b in prob.blocks]

    def split(c: Coeffs) -> Coeffs:
        free = np.array([b.kind == FREE for b in prob.blocks])[c.blk]
        sizes = np.array([b.size for b in prob.blocks])[c.blk]
        item = np.concatenate([c.item, c.item[free]])
        blk = np.concatenate([c.blk, c.blk[free]])
        row = np.concatenate([c.row, (c.row + sizes)[free]])
        val = np.concatenate([c.val, -c.val[free]])
        return Coeffs.build(item, blk, row, row.copy(), val)

    return SdpProblem(tuple(blocks), split(prob.objective), split(prob.constraints),
                      prob.rhs, prob.relations, prob.sense, prob.name)


def export_sdpa(prob: SdpProblem, path) -> Path:
    """Write ``prob`` in SDPA sparse format. All rows must already be equalities."""
    if any(r != "=" for r in prob.relations):
        raise SdpError("convert inequalities with with_slacks() before export")
    prob = _split_free(prob)
    path = Path(path)
    sign = 1.0 if prob.sense == "max" else -1.0
    lines = [
        str(prob.n_constraints),
        str(len(prob.blocks)),
        " ".join(str(-b.size if b.kind == DIAG else b.size) for b in prob.blocks),
        " ".join(_fmt(v) for v in prob.rhs),
    ]
    o = prob.objective
    for blk, i, j, v in zip(o.blk, o.row, o.col, o.val):
        lines.append(f"0 {blk + 1} {i + 1} {j + 1} {_fmt(sign * v)}")
    c = prob.constraints
    for k, blk, i, j, v in zip(c.item, c.blk, c.row, c.col, c.val):
        lines.append(f"{k + 1} {blk + 1} {i + 1} {j + 1} {_fmt(v)}")
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise SdpError(f"cannot write {path}: {exc}") from exc
    return path


_SEP = re.compile(r"[,{}()\s]+")


def read_sdpa(path, sense: str = "min", name: str | None = None) -> SdpProblem:
    """Parse an SDPA sparse file into a standard-form problem of the given sense."""
    path = Path(path)
    raw = [ln for ln in path.read_text().splitlines()
           if ln.strip() and not ln.lstrip().startswith(('"', "*"))]
    if len(raw) < 4:
        raise SdpError(f"{path}: truncated SDPA header")

    def nums(line):
        return [t for t in _SEP.split(line.strip()) if t]

    m = int(nums(raw[0])[0])
    nblocks = int(nums(raw[1])[0])
    sizes = [int(float(t)) for t in nums(raw[2])][:nblocks]
    rhs = np.array([float(t) for t in nums(raw[3])][:m])
    if len(sizes) != nblocks or rhs.size != m:
        raise SdpError(f"{path}: header does not match declared counts")
    blocks = tuple(Block(f"b{k + 1}", abs(s), DIAG if s < 0 else PSD) for k, s in enumerate(sizes))
    obj, con = [], []
    sign = 1.0 if sense == "max" else -1.0
    for line in raw[4:]:
        t = nums(line)
        if len(t) < 5:
            raise SdpError(f"{path}: malformed entry line {line!r}")
        k, blk, i, j = (int(x) for x in t[:4])
        v = float(t[4])
        if k == 0:
            obj.append((0, blk - 1, i - 1, j - 1, sign * v))
        else:
            con.append((k - 1, blk - 1, i - 1, j - 1, v))
    return SdpProblem(blocks, Coeffs.from_entries(obj), Coeffs.from_entries(con), rhs,
                      ("=",) * m, sense, name or path.stem)


def inspect_sdpa(path) -> dict:
    """Stream a file and check its structure: header counts, entry ranges, upper-triangle entries.

    Returns ``{"m", "sizes", "entries", "max_item", "errors"}`` without building the problem.
    """
    path = Path(path)
    errors: list[str] = []
    header: list[list[str]] = []
    entries = 0
    max_item = 0
    sizes: list[int] = []
    with path.open() as fh:
        for line in fh:
            s = line.strip()
            if not s or s.startswith(('"', "*")):
                continue
            t = [x for x in _SEP.split(s) if x]
            if len(header) < 4:
                header.append(t)
                if len(header) == 3:
                    sizes = [int(float(x)) for x in t]
                continue
            entries += 1
            k, blk, i, j = (int(x) for x in t[:4])
            max_item = max(max_item, k)
            if not 1 <= blk <= len(sizes):
                errors.append(f"entry {entries}: block {blk} out of range")
            elif not 1 <= i <= j <= abs(sizes[blk - 1]):
                errors.append(f"entry {entries}: ({i}, {j}) outside block {blk}")
            elif sizes[blk - 1] < 0 and i != j:
                errors.append(f"entry {entries}: off-diagonal entry in diagonal block {blk}")
            if len(errors) > 20:
                break
    if len(header) < 4:
        raise SdpError(f"{path}: truncated SDPA header")
    m = int(header[0][0])
    if int(header[1][0]) != len(sizes):
        errors.append("block count does not match the size line")
    if len(header[3]) != m:
        errors.append("right-hand side length does not match m")
    if max_item > m:
        errors.append("constraint index exceeds m")
    return {"m": m, "sizes": sizes, "entries": entries, "max_item": max_item, "errors": errors}
