"""Least-squares recovery of spread parameters from state time series.

The one-step updates are linear in the unknown rates, so stacking state
differences over a window of T transitions gives an overdetermined linear
system Q * theta = delta. Exact identifiability reduces to full column rank
of Q, which in turn reduces to simple nonzero / non-proportionality
conditions on the observed states; those are checked explicitly so a
degenerate window is reported rather than silently producing one of many
consistent solutions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (EpidemicState, SeirParams, SirParams, Trajectory,
                       simulate)
from .graph import Network

__all__ = [
    "RegressionSystem",
    "IdentifiabilityVerdict",
    "EstimateReport",
    "NoiseModel",
    "g_value",
    "check_identifiability_sir_homog",
    "check_identifiability_sir_hetero",
    "check_identifiability_seir",
    "build_regression_sir_homog",
    "build_regression_sir_hetero",
    "build_regression_seir",
    "solve_least_squares",
    "apply_noise",
    "estimate_pipeline",
    "report_to_json",
]

NONZERO_TOL = 1e-12
RANK_TOL_FACTOR = 1e-10


@dataclass(frozen=True)
class RegressionSystem:
    q: np.ndarray
    delta: np.ndarray
    kind: str  # "sir-homog" | "sir-hetero" | "seir-homog" | "seir-hetero"
    t: int
    node: int | None = None

    @property
    def param_names(self) -> tuple[str, ...]:
        if self.kind.startswith("sir"):
            return ("beta", "gamma")
        return ("beta_e", "beta", "sigma", "gamma")


@dataclass(frozen=True)
class IdentifiabilityVerdict:
    identifiable: bool
    witnesses: dict = field(default_factory=dict)
    failed_conditions: tuple[str, ...] = ()
    derived_condition: bool = False


@dataclass(frozen=True)
class EstimateReport:
    kind: str
    estimates: np.ndarray
    residual_norm: float
    rank: int
    verdict: IdentifiabilityVerdict | None
    non_unique: bool
    trajectory_errors: dict | None = None

    def estimates_dict(self) -> dict:
        names = ("beta", "gamma") if self.kind.startswith("sir") else ("beta_e", "beta", "sigma", "gamma")
        est = np.atleast_2d(self.estimates)
        if est.shape[0] == 1:
            return {name: float(v) for name, v in zip(names, est[0])}
        return {name: est[:, idx].tolist() for idx, name in enumerate(names)}


@dataclass(frozen=True)
class NoiseModel:
    """Per-measurement Gaussian noise with level-dependent second parameter.

    The second parameter of the normal distribution, slope*x + floor, is read
    as a variance by default; set ``param_is_std`` to treat it as a standard
    deviation instead.
    """

    e_slope: float = 0.015
    e_floor: float = 0.0001
    x_slope: float = 0.008
    x_floor: float = 0.00001
    seed: int = 0
    start_k: int = 0
    param_is_std: bool = False

    def __post_init__(self):
        if min(self.e_slope, self.e_floor, self.x_slope, self.x_floor) < 0:
            raise ValueError("noise slopes and floors must be >= 0")


def g_value(traj: Trajectory, net: Network, i: int, k: int, x: str) -> float:
    """s_i^k times the weighted neighbor sum of compartment ``x`` ("e" or "p")."""
    if not (0 <= k < len(traj)):
        raise IndexError("step index out of range")
    if not (0 <= i < net.n):
        raise IndexError("node index out of range")
    st = traj.states[k]
    vec = st.p if x == "p" else st.e
    if vec is None:
        raise ValueError(f"compartment {x!r} not present in this trajectory")
    return float(st.s[i] * (net.adjacency[i] @ vec))


def _nonzero(x: float) -> bool:
    return abs(x) > NONZERO_TOL


def check_identifiability_sir_homog(traj: Trajectory, net: Network) -> IdentifiabilityVerdict:
    """Homogeneous SIR: need some p != 0 and some (S A p) entry != 0 over the window."""
    if traj.transitions < 1:
        raise ValueError("need at least one transition (T >= 1)")
    witnesses = {}
    failed = []
    for k in range(traj.transitions):
        st = traj.states[k]
        idx = np.flatnonzero(np.abs(st.p) > NONZERO_TOL)
        if idx.size:
            witnesses["p_nonzero"] = {"i": int(idx[0]), "k": k, "value": float(st.p[idx[0]])}
            break
    else:
        failed.append("p_nonzero")
    for k in range(traj.transitions):
        st = traj.states[k]
        sap = st.s * (net.adjacency @ st.p)
        idx = np.flatnonzero(np.abs(sap) > NONZERO_TOL)
        if idx.size:
            witnesses["sAp_nonzero"] = {"i": int(idx[0]), "k": k, "value": float(sap[idx[0]])}
            break
    else:
        failed.append("sAp_nonzero")
    return IdentifiabilityVerdict(identifiable=not failed, witnesses=witnesses,
                                  failed_conditions=tuple(failed))


def check_identifiability_sir_hetero(traj: Trajectory, net: Network, i: int) -> IdentifiabilityVerdict:
    """Per-node analog of the homogeneous SIR conditions, restricted to node i.

    The source results state no per-node SIR theorem; this is the direct
    per-node translation and is flagged as a derived condition.
    """
    if traj.transitions < 1:
        raise ValueError("need at least one transition (T >= 1)")
    if not (0 <= i < net.n):
        raise IndexError("node index out of range")
    witnesses = {}
    failed = []
    for k in range(traj.transitions):
        if _nonzero(traj.states[k].p[i]):
            witnesses["p_i_nonzero"] = {"k": k, "value": float(traj.states[k].p[i])}
            break
    else:
        failed.append("p_i_nonzero")
    for k in range(traj.transitions):
        val = g_value(traj, net, i, k, "p")
        if _nonzero(val):
            witnesses["g_i_p_nonzero"] = {"k": k, "value": val}
            break
    else:
        failed.append("g_i_p_nonzero")
    return IdentifiabilityVerdict(identifiable=not failed, witnesses=witnesses,
                                  failed_conditions=tuple(failed), derived_condition=True)


def check_identifiability_seir(traj: Trajectory, net: Network,
                               node: int | None = None) -> IdentifiabilityVerdict:
    """SEIR identifiability: nonzero p, nonzero e, and a non-proportional pair
    of (g(e), g(p)) values. ``node`` restricts everything to one node, which
    requires T > 1; the network-wide check requires n > 1 and T > 0."""
    if traj.kind != "seir":
        raise ValueError("SEIR identifiability needs an SEIR trajectory")
    t = traj.transitions
    if node is None:
        if net.n <= 1:
            raise ValueError("network-wide SEIR identifiability requires n > 1")
        if t < 1:
            raise ValueError("need T > 0")
        nodes = range(net.n)
        p_nodes = e_nodes = nodes
    else:
        if not (0 <= node < net.n):
            raise IndexError("node index out of range")
        if t < 1:
            raise ValueError("need at least one transition")
        if t < 2:
            # per-node identification needs two transitions; with fewer the
            # stacked system cannot reach full column rank
            return IdentifiabilityVerdict(identifiable=False,
                                          failed_conditions=("horizon_T>1",))
        nodes = [node]
        p_nodes = e_nodes = nodes
    witnesses = {}
    failed = []

    def find_nonzero(which: str, candidates) -> bool:
        for k in range(t):
            st = traj.states[k]
            vec = st.p if which == "p" else st.e
            for i in candidates:
                if _nonzero(vec[i]):
                    witnesses[f"{which}_nonzero"] = {"i": i, "k": k, "value": float(vec[i])}
                    return True
        return False

    if not find_nonzero("p", p_nodes):
        failed.append("p_nonzero")
    if not find_nonzero("e", e_nodes):
        failed.append("e_nonzero")

    ge = np.array([[g_value(traj, net, i, k, "e") for k in range(t)] for i in range(net.n)])
    gp = np.array([[g_value(traj, net, i, k, "p") for k in range(t)] for i in range(net.n)])
    found = False
    for i3 in nodes:
        for k3 in range(t):
            for i4 in nodes:
                for k4 in range(t):
                    lhs = ge[i3, k3] * gp[i4, k4]
                    rhs = ge[i4, k4] * gp[i3, k3]
                    scale = max(1.0, abs(lhs), abs(rhs))
                    if abs(lhs - rhs) > NONZERO_TOL * scale:
                        witnesses["g_pair"] = {
                            "i3": i3, "k3": k3, "i4": i4, "k4": k4,
                            "lhs": lhs, "rhs": rhs,
                        }
                        found = True
                        break
                if found:
                    break
            if found:
                break
        if found:
            break
    if not found:
        failed.append("g_pair_nonproportional")
    return IdentifiabilityVerdict(identifiable=not failed, witnesses=witnesses,
                                  failed_conditions=tuple(failed))


def build_regression_sir_homog(traj: Trajectory, net: Network) -> RegressionSystem:
    """Stack the p- and r-updates over all nodes and steps; unknowns (beta, gamma)."""
    if traj.kind != "sir":
        raise ValueError("needs an SIR trajectory")
    t = traj.transitions
    if t < 1:
        raise ValueError("need at least one transition")
    h, a = traj.h, net.adjacency
    a_col = np.concatenate([h * traj.states[k].s * (a @ traj.states[k].p) for k in range(t)])
    b_col = np.concatenate([h * traj.states[k].p for k in range(t)])
    zeros = np.zeros_like(a_col)
    q = np.block([[a_col[:, None], -b_col[:, None]],
                  [zeros[:, None], b_col[:, None]]])
    dp = np.concatenate([traj.states[k + 1].p - traj.states[k].p for k in range(t)])
    dr = np.concatenate([traj.states[k + 1].r - traj.states[k].r for k in range(t)])
    return RegressionSystem(q=q, delta=np.concatenate([dp, dr]), kind="sir-homog", t=t)


def build_regression_sir_hetero(traj: Trajectory, net: Network, i: int) -> RegressionSystem:
    if traj.kind != "sir":
        raise ValueError("needs an SIR trajectory")
    if not (0 <= i < net.n):
        raise IndexError("node index out of range")
    t = traj.transitions
    if t < 1:
        raise ValueError("need at least one transition")
    h, a = traj.h, net.adjacency
    a_col = np.array([h * traj.states[k].s[i] * (a[i] @ traj.states[k].p) for k in range(t)])
    b_col = np.array([h * traj.states[k].p[i] for k in range(t)])
    zeros = np.zeros_like(a_col)
    q = np.block([[a_col[:, None], -b_col[:, None]],
                  [zeros[:, None], b_col[:, None]]])
    dp = np.array([traj.states[k + 1].p[i] - traj.states[k].p[i] for k in range(t)])
    dr = np.array([traj.states[k + 1].r[i] - traj.states[k].r[i] for k in range(t)])
    return RegressionSystem(q=q, delta=np.concatenate([dp, dr]),
                            kind="sir-hetero", t=t, node=i)


def build_regression_seir(traj: Trajectory, net: Network,
                          node: int | None = None) -> RegressionSystem:
    """Stack e-, p-, and r-updates; unknowns (beta_e, beta, sigma, gamma)."""
    if traj.kind != "seir":
        raise ValueError("needs an SEIR trajectory")
    t = traj.transitions
    if t < 1:
        raise ValueError("need at least one transition")
    h, a = traj.h, net.adjacency
    if node is None:
        ae = np.concatenate([h * traj.states[k].s * (a @ traj.states[k].e) for k in range(t)])
        be = np.concatenate([h * traj.states[k].s * (a @ traj.states[k].p) for k in range(t)])
        ce = np.concatenate([h * traj.states[k].e for k in range(t)])
        de = np.concatenate([h * traj.states[k].p for k in range(t)])
        sel = slice(None)
        kind = "seir-homog"
    else:
        if not (0 <= node < net.n):
            raise IndexError("node index out of range")
        ae = np.array([h * traj.states[k].s[node] * (a[node] @ traj.states[k].e) for k in range(t)])
        be = np.array([h * traj.states[k].s[node] * (a[node] @ traj.states[k].p) for k in range(t)])
        ce = np.array([h * traj.states[k].e[node] for k in range(t)])
        de = np.array([h * traj.states[k].p[node] for k in range(t)])
        sel = node
        kind = "seir-hetero"
    rows = len(ae)
    z = np.zeros(rows)
    phi = np.column_stack([ae, be, -ce, z])
    sig = np.column_stack([z, z, ce, -de])
    gam = np.column_stack([z, z, z, de])
    q = np.vstack([phi, sig, gam])
    if node is None:
        d_e = np.concatenate([traj.states[k + 1].e - traj.states[k].e for k in range(t)])
        d_p = np.concatenate([traj.states[k + 1].p - traj.states[k].p for k in range(t)])
        d_r = np.concatenate([traj.states[k + 1].r - traj.states[k].r for k in range(t)])
    else:
        d_e = np.array([traj.states[k + 1].e[sel] - traj.states[k].e[sel] for k in range(t)])
        d_p = np.array([traj.states[k + 1].p[sel] - traj.states[k].p[sel] for k in range(t)])
        d_r = np.array([traj.states[k + 1].r[sel] - traj.states[k].r[sel] for k in range(t)])
    return RegressionSystem(q=q, delta=np.concatenate([d_e, d_p, d_r]),
                            kind=kind, t=t, node=node)


def solve_least_squares(sys: RegressionSystem,
                        verdict: IdentifiabilityVerdict | None = None) -> EstimateReport:
    """Minimum-norm least-squares solve with explicit numerical rank.

    Singular values below RANK_TOL_FACTOR times the largest column norm are
    treated as zero; rank below the column count sets the non-uniqueness flag.
    """
    q, delta = sys.q, sys.delta
    if q.size == 0:
        raise ValueError("empty regression system")
    col_norms = np.linalg.norm(q, axis=0)
    tol = RANK_TOL_FACTOR * max(float(col_norms.max()), np.finfo(float).tiny)
    u, s, vt = np.linalg.svd(q, full_matrices=False)
    rank = int(np.sum(s > tol))
    s_inv = np.where(s > tol, 1.0 / np.where(s > tol, s, 1.0), 0.0)
    theta = vt.T @ (s_inv * (u.T @ delta))
    residual = float(np.linalg.norm(q @ theta - delta))
    return EstimateReport(kind=sys.kind, estimates=theta, residual_norm=residual,
                          rank=rank, verdict=verdict,
                          non_unique=rank < q.shape[1])


def apply_noise(traj: Trajectory, model: NoiseModel) -> Trajectory:
    """Measured trajectory: Gaussian perturbations on e, p, r from step
    ``start_k`` on (earlier steps are dropped), clamped to [0, 1], with s
    recomputed from the conservation law. Deterministic under the seed."""
    if traj.kind != "seir":
        raise ValueError("noise model applies to SEIR trajectories")
    if model.start_k >= len(traj):
        raise ValueError("start_k beyond trajectory horizon")
    rng = np.random.default_rng(model.seed)

    def scale(x: np.ndarray, slope: float, floor: float) -> np.ndarray:
        second = slope * x + floor
        return second if model.param_is_std else np.sqrt(second)

    states = []
    for st in traj.states[model.start_k:]:
        e = st.e + rng.normal(0.0, 1.0, st.n) * scale(st.e, model.e_slope, model.e_floor)
        p = st.p + rng.normal(0.0, 1.0, st.n) * scale(st.p, model.x_slope, model.x_floor)
        r = st.r + rng.normal(0.0, 1.0, st.n) * scale(st.r, model.x_slope, model.x_floor)
        e = np.clip(e, 0.0, 1.0)
        p = np.clip(p, 0.0, 1.0)
        r = np.clip(r, 0.0, 1.0)
        s = 1.0 - e - p - r
        states.append(EpidemicState(s=s, e=e, p=p, r=r))
    return Trajectory(kind="seir", states=tuple(states), h=traj.h)


def _trajectory_errors(measured: Trajectory, resim: Trajectory, metric: str) -> dict:
    out = {}
    comps = ["s", "p", "r"] + (["e"] if measured.kind == "seir" else [])
    for comp in comps:
        diffs = []
        for a, b in zip(measured.states, resim.states):
            diffs.append(getattr(a, comp) - getattr(b, comp))
        d = np.concatenate(diffs)
        if metric == "rmse":
            out[comp] = float(np.sqrt(np.mean(d ** 2)))
        else:
            out[comp] = float(np.mean(np.abs(d)))
    return out


def estimate_pipeline(measured: Trajectory, net: Network, kind: str,
                      node: int | None = None, resimulate: bool = True,
                      error_metric: str = "mae") -> EstimateReport:
    """Identifiability check, system assembly, pseudoinverse solve, and an
    optional re-simulation from the first measured state to score the fit."""
    if kind == "sir":
        verdict = (check_identifiability_sir_homog(measured, net) if node is None
                   else check_identifiability_sir_hetero(measured, net, node))
        sys = (build_regression_sir_homog(measured, net) if node is None
               else build_regression_sir_hetero(measured, net, node))
    elif kind == "seir":
        verdict = check_identifiability_seir(measured, net, node=node)
        sys = build_regression_seir(measured, net, node=node)
    else:
        raise ValueError("kind must be 'sir' or 'seir'")
    report = solve_least_squares(sys, verdict=verdict)
    if not verdict.identifiable or not resimulate:
        return report
    theta = report.estimates
    if kind == "sir":
        params = SirParams(beta=theta[0], gamma=theta[1], h=measured.h)
    else:
        params = SeirParams(beta_e=theta[0], beta=theta[1], sigma=theta[2],
                            gamma=theta[3], h=measured.h)
    try:
        resim = simulate(measured.states[0], params, net,
                         steps=measured.transitions, strict=False)
    except (ValueError, TypeError):
        return report
    errors = _trajectory_errors(measured, resim, error_metric)
    return EstimateReport(kind=report.kind, estimates=report.estimates,
                          residual_norm=report.residual_norm, rank=report.rank,
                          verdict=verdict, non_unique=report.non_unique,
                          trajectory_errors=errors)


def report_to_json(report: EstimateReport) -> str:
    verdict = report.verdict
    return json.dumps({
        "kind": report.kind,
        "estimates": report.estimates_dict(),
        "residual_norm": report.residual_norm,
        "rank": report.rank,
        "identifiable": None if verdict is None else verdict.identifiable,
        "witnesses": None if verdict is None else verdict.witnesses,
        "failed_conditions": None if verdict is None else list(verdict.failed_conditions),
        "non_unique": report.non_unique,
        "trajectory_errors": report.trajectory_errors,
    }, indent=2)
