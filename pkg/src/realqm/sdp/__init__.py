from .interior import DEFAULT_CAP, solve_interior_point
from .problem import (DIAG, FREE, INACCURATE, INFEASIBLE, ITER_LIMIT, OPTIMAL, PSD, UNBOUNDED,
                      Block, CapExceeded, Coeffs, SdpBuilder, SdpError, SdpProblem, SdpSolution,
                      from_lmi)
from .sdpa import export_sdpa, inspect_sdpa, read_sdpa
from .splitting import SplittingDivergence, solve_splitting


def solve(prob: SdpProblem, backend: str = "interior", **kwargs) -> SdpSolution:
    if backend == "interior":
        return solve_interior_point(prob, **kwargs)
    if backend == "splitting":
        return solve_splitting(prob, **kwargs)
    raise ValueError(f"unknown backend {backend!r}")


__all__ = [
    "Block", "CapExceeded", "Coeffs", "DEFAULT_CAP", "DIAG", "FREE", "INACCURATE", "INFEASIBLE",
    "ITER_LIMIT", "OPTIMAL", "PSD", "SdpBuilder", "SdpError", "SdpProblem", "SdpSolution",
    "SplittingDivergence", "UNBOUNDED", "export_sdpa", "from_lmi", "inspect_sdpa", "read_sdpa", "solve",
    "solve_interior_point", "solve_splitting",
]
