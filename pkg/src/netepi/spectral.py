"""Spreading-matrix construction, Perron-root computation, and convergence
diagnostics for simulated epidemics.

The one-step linear map on the infectious coordinates is state dependent:
for SEIR it is the 2n x 2n block matrix

    [ I + h*diag(s)*Be*A - h*sigma   h*diag(s)*B*A ]
    [ h*sigma                        I - h*gamma   ]

acting on (e, p); for SIR it is the n x n matrix
I + h*diag(s)*B*A - h*gamma acting on p alone. Its dominant eigenvalue
drops below 1 once enough susceptibles are depleted, after which the
infection decays geometrically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dynamics import SeirParams, SirParams, Trajectory, EpidemicState
from .graph import Network

__all__ = [
    "SpreadingMatrix",
    "ConvergenceReport",
    "PowerIterationError",
    "build_spreading_matrix",
    "dominant_eigenvalue",
    "convergence_diagnostics",
    "report_to_csv",
    "report_to_json",
]

EXTINCTION_THRESHOLD = 1e-8
MONOTONE_TOL = 1e-10


class PowerIterationError(RuntimeError):
    """Power iteration failed to converge within the iteration cap."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (achieved residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class SpreadingMatrix:
    m: np.ndarray
    k: int = 0


@dataclass(frozen=True)
class ConvergenceReport:
    lambda_seq: np.ndarray
    k_bar: int | None
    monotone: bool
    linear_rate_estimate: float | None
    extinction_step: int | None
    p_norms: np.ndarray


def build_spreading_matrix(state: EpidemicState, params, net: Network,
                           k: int = 0) -> SpreadingMatrix:
    """Linear map propagating the infectious coordinates one step from ``state``."""
    n = net.n
    if state.n != n:
        raise ValueError("state/network dimension mismatch")
    a = net.adjacency
    eye = np.eye(n)
    if isinstance(params, SirParams):
        pr = params.resolved(n)
        m = eye + pr.h * (state.s[:, None] * (pr.beta[:, None] * a)) - pr.h * np.diag(pr.gamma)
        return SpreadingMatrix(m=m, k=k)
    if isinstance(params, SeirParams):
        if state.e is None:
            raise ValueError("SEIR spreading matrix needs an exposed compartment")
        pr = params.resolved(n)
        sba_e = state.s[:, None] * (pr.beta_e[:, None] * a)
        sba_p = state.s[:, None] * (pr.beta[:, None] * a)
        top = np.hstack([eye + pr.h * sba_e - pr.h * np.diag(pr.sigma), pr.h * sba_p])
        bot = np.hstack([pr.h * np.diag(pr.sigma), eye - pr.h * np.diag(pr.gamma)])
        return SpreadingMatrix(m=np.vstack([top, bot]), k=k)
    raise TypeError("params must be SirParams or SeirParams")


def dominant_eigenvalue(m: np.ndarray, v0: np.ndarray | None = None,
                        rtol: float = 1e-12, max_iter: int = 100_000
                        ) -> tuple[float, np.ndarray]:
    """Spectral radius and a nonnegative left eigenvector (unit 1-norm).

    Power iteration runs on the transpose of ``m + eps*I``; the small diagonal
    shift keeps the Perron value (subtracted before returning) while breaking
    the period-2 oscillation of patterns like permutation matrices. ``v0``
    warm-starts the iteration, which pays off when scanning a trajectory whose
    matrices change slowly.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    if np.any(m < 0):
        raise ValueError("matrix must be nonnegative")
    n = m.shape[0]
    eps = 1e-8
    mt = m.T + eps * np.eye(n)
    if v0 is None:
        w = np.full(n, 1.0 / n)
    else:
        w = np.asarray(v0, dtype=float).clip(min=0)
        tot = w.sum()
        w = np.full(n, 1.0 / n) if tot <= 0 else w / tot
    lam = 0.0
    for _ in range(max_iter):
        nxt = mt @ w
        norm = nxt.sum()  # 1-norm: all entries nonnegative
        if norm == 0.0:
            return 0.0, w
        w_new = nxt / norm
        delta = np.abs(w_new - w).sum()
        lam = norm
        w = w_new
        if delta <= rtol:
            return lam - eps, w
    residual = float(np.abs(mt @ w - lam * w).sum())
    raise PowerIterationError("power iteration did not converge", residual)


def _p_norm(state: EpidemicState) -> float:
    return float(np.linalg.norm(state.p))


def convergence_diagnostics(traj: Trajectory, params, net: Network,
                            extinction_threshold: float = EXTINCTION_THRESHOLD
                            ) -> ConvergenceReport:
    """Per-step dominant eigenvalues and decay diagnostics for a simulated run."""
    if len(traj) < 2:
        raise ValueError("trajectory too short for diagnostics (< 2 states)")
    lambdas = np.empty(len(traj))
    w = None
    for k, st in enumerate(traj.states):
        sm = build_spreading_matrix(st, params, net, k=k)
        lambdas[k], w = dominant_eigenvalue(sm.m, v0=w)
    k_bar = None
    for k, lam in enumerate(lambdas):
        if lam < 1.0:
            k_bar = k
            break
    monotone = bool(np.all(np.diff(lambdas) <= MONOTONE_TOL))
    p_norms = np.array([_p_norm(st) for st in traj.states])
    extinction_step = None
    for k, st in enumerate(traj.states):
        peak = float(np.max(st.p))
        if st.e is not None:
            peak = max(peak, float(np.max(st.e)))
        if peak < extinction_threshold:
            extinction_step = k
            break
    rate = None
    if k_bar is not None:
        end = extinction_step if extinction_step is not None else len(traj) - 1
        ks = np.arange(k_bar, end + 1)
        vals = p_norms[k_bar:end + 1]
        mask = vals > 0
        if mask.sum() >= 2:
            slope = np.polyfit(ks[mask], np.log(vals[mask]), 1)[0]
            rate = float(np.exp(slope))
    return ConvergenceReport(lambda_seq=lambdas, k_bar=k_bar, monotone=monotone,
                             linear_rate_estimate=rate,
                             extinction_step=extinction_step, p_norms=p_norms)


def report_to_csv(report: ConvergenceReport) -> str:
    lines = ["k,lambda_max,p_norm"]
    for k, (lam, pn) in enumerate(zip(report.lambda_seq, report.p_norms)):
        lines.append(f"{k},{format(lam, '.17g')},{format(pn, '.17g')}")
    return "\n".join(lines) + "\n"


def report_to_json(report: ConvergenceReport) -> str:
    return json.dumps({
        "k_bar": report.k_bar,
        "monotone": report.monotone,
        "linear_rate_estimate": report.linear_rate_estimate,
        "extinction_step": report.extinction_step,
    }, indent=2)
