"""Discrete-time networked SIR/SEIR stepping and simulation.

Per-node updates (SIR), with pressure(i) = beta_i * sum_j a_ij * p_j:

    s' = s - h*s*pressure
    p' = p + h*(s*pressure - gamma*p)
    r' = r + h*gamma*p

SEIR adds an exposed compartment fed by pressure from both e and p. All
compartments stay in [0, 1] and sum to 1 per node as long as the
well-posedness inequalities hold (see check_assumption_*).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .graph import Network

__all__ = [
    "SirParams",
    "SeirParams",
    "EpidemicState",
    "Trajectory",
    "AssumptionViolation",
    "AssumptionReport",
    "AssumptionError",
    "StateInvariantError",
    "check_assumption_sir",
    "check_assumption_seir",
    "sir_step",
    "sir_step_matrix",
    "seir_step",
    "seir_step_multilayer",
    "seir_step_matrix",
    "simulate",
    "trajectory_to_csv",
    "trajectory_from_csv",
]

SUM_TOL = 1e-9


class AssumptionError(ValueError):
    """Well-posedness inequalities violated."""


class StateInvariantError(ValueError):
    """State off the unit simplex beyond tolerance."""


def _as_vector(x, n: int, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = np.full(n, float(v))
    if v.shape != (n,):
        raise ValueError(f"{name} must be a scalar or length-{n} vector")
    return v


@dataclass(frozen=True)
class SirParams:
    beta: np.ndarray
    gamma: np.ndarray
    h: float

    def resolved(self, n: int) -> "SirParams":
        return SirParams(_as_vector(self.beta, n, "beta"),
                         _as_vector(self.gamma, n, "gamma"), float(self.h))


@dataclass(frozen=True)
class SeirParams:
    beta_e: np.ndarray
    beta: np.ndarray
    sigma: np.ndarray
    gamma: np.ndarray
    h: float
    layer_beta_e: tuple = ()
    layer_beta: tuple = ()

    def resolved(self, n: int) -> "SeirParams":
        return SeirParams(
            _as_vector(self.beta_e, n, "beta_e"),
            _as_vector(self.beta, n, "beta"),
            _as_vector(self.sigma, n, "sigma"),
            _as_vector(self.gamma, n, "gamma"),
            float(self.h),
            tuple(_as_vector(v, n, "layer_beta_e") for v in self.layer_beta_e),
            tuple(_as_vector(v, n, "layer_beta") for v in self.layer_beta),
        )


@dataclass(frozen=True)
class EpidemicState:
    """Per-node compartment levels; ``e`` is None for SIR states."""

    s: np.ndarray
    p: np.ndarray
    r: np.ndarray
    e: np.ndarray | None = None

    def __post_init__(self):
        for name in ("s", "p", "r", "e"):
            v = getattr(self, name)
            if v is None:
                continue
            v = np.asarray(v, dtype=float)
            object.__setattr__(self, name, v)
        n = self.s.shape[0]
        for name in ("p", "r"):
            if getattr(self, name).shape != (n,):
                raise ValueError("compartment vectors must share one length")
        if self.e is not None and self.e.shape != (n,):
            raise ValueError("compartment vectors must share one length")

    @property
    def n(self) -> int:
        return self.s.shape[0]

    @property
    def kind(self) -> str:
        return "sir" if self.e is None else "seir"

    def validate(self, tol: float = SUM_TOL) -> None:
        parts = [self.s, self.p, self.r] + ([self.e] if self.e is not None else [])
        for v in parts:
            if np.any(v < -tol) or np.any(v > 1 + tol):
                raise StateInvariantError("compartment level outside [0, 1]")
        total = sum(parts)
        if np.any(np.abs(total - 1.0) > tol):
            raise StateInvariantError("per-node compartments do not sum to 1")


@dataclass(frozen=True)
class Trajectory:
    kind: str  # "sir" or "seir"
    states: tuple[EpidemicState, ...]
    h: float

    def __post_init__(self):
        if not self.states:
            raise ValueError("trajectory must contain at least one state")
        object.__setattr__(self, "states", tuple(self.states))

    def __len__(self) -> int:
        return len(self.states)

    @property
    def n(self) -> int:
        return self.states[0].n

    @property
    def transitions(self) -> int:
        return len(self.states) - 1


@dataclass(frozen=True)
class AssumptionViolation:
    node: int
    label: str
    value: float
    bound: str

    def __str__(self) -> str:
        return f"node {self.node}: {self.label} = {self.value:.6g} {self.bound}"


@dataclass(frozen=True)
class AssumptionReport:
    violations: tuple[AssumptionViolation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def raise_if_violated(self) -> None:
        if self.violations:
            msgs = "; ".join(str(v) for v in self.violations)
            raise AssumptionError(f"well-posedness violated: {msgs}")


def check_assumption_sir(params: SirParams, net: Network) -> AssumptionReport:
    """Every node needs 0 < h*gamma < 1 and h*beta*(row sum of A) < 1."""
    pr = params.resolved(net.n)
    h = pr.h
    rowsum = net.adjacency.sum(axis=1)
    out = []
    for i in range(net.n):
        hg = h * pr.gamma[i]
        if not (0 < hg < 1):
            out.append(AssumptionViolation(i, "h*gamma", hg, "not in (0, 1)"))
        hb = h * pr.beta[i] * rowsum[i]
        if not (hb < 1):
            out.append(AssumptionViolation(i, "h*beta*row_sum", hb, "not < 1"))
        if pr.beta[i] < 0:
            out.append(AssumptionViolation(i, "beta", pr.beta[i], "negative"))
    return AssumptionReport(tuple(out))


def check_assumption_seir(params: SeirParams, net: Network,
                          include_layers: bool = True) -> AssumptionReport:
    """SEIR well-posedness: 0 < h*gamma < 1, 0 < h*sigma <= 1, and
    h*(beta_e + beta)*(row sum) < 1, extended over any extra layers."""
    pr = params.resolved(net.n)
    h = pr.h
    rowsum = net.adjacency.sum(axis=1)
    out = []
    for i in range(net.n):
        hg = h * pr.gamma[i]
        if not (0 < hg < 1):
            out.append(AssumptionViolation(i, "h*gamma", hg, "not in (0, 1)"))
        hs = h * pr.sigma[i]
        if not (0 < hs <= 1):
            out.append(AssumptionViolation(i, "h*sigma", hs, "not in (0, 1]"))
        if pr.beta_e[i] < 0 or pr.beta[i] < 0:
            out.append(AssumptionViolation(i, "beta_e/beta", min(pr.beta_e[i], pr.beta[i]), "negative"))
        hb = h * (pr.beta_e[i] + pr.beta[i]) * rowsum[i]
        if include_layers:
            for lidx, layer in enumerate(net.layers):
                if lidx < len(pr.layer_beta_e):
                    hb += h * (pr.layer_beta_e[lidx][i] + pr.layer_beta[lidx][i]) * layer[i].sum()
        if not (0 <= hb < 1):
            out.append(AssumptionViolation(i, "h*(beta_e+beta)*row_sum", hb, "not in [0, 1)"))
    return AssumptionReport(tuple(out))


def _gate_sir(state: EpidemicState, params: SirParams, net: Network,
              strict: bool, check_params: bool) -> SirParams:
    if state.kind != "sir":
        raise ValueError("SIR step requires a state without an exposed compartment")
    if state.n != net.n:
        raise ValueError("state/network dimension mismatch")
    pr = params.resolved(net.n)
    if check_params:
        check_assumption_sir(pr, net).raise_if_violated()
    if strict:
        state.validate()
    return pr


def _gate_seir(state: EpidemicState, params: SeirParams, net: Network,
               strict: bool, check_params: bool, layers: bool) -> SeirParams:
    if state.kind != "seir":
        raise ValueError("SEIR step requires a state with an exposed compartment")
    if state.n != net.n:
        raise ValueError("state/network dimension mismatch")
    pr = params.resolved(net.n)
    if layers and len(pr.layer_beta_e) != len(net.layers):
        raise ValueError("layer rate count does not match network layer count")
    if len(pr.layer_beta_e) != len(pr.layer_beta):
        raise ValueError("layer_beta_e and layer_beta must have matching length")
    if check_params:
        check_assumption_seir(pr, net, include_layers=layers).raise_if_violated()
    if strict:
        state.validate()
    return pr


def sir_step(state: EpidemicState, params: SirParams, net: Network,
             strict: bool = True, check_params: bool = True) -> EpidemicState:
    """One SIR step, written as explicit per-node sums."""
    pr = _gate_sir(state, params, net, strict, check_params)
    n, h, a = net.n, pr.h, net.adjacency
    s, p, r = state.s, state.p, state.r
    s2 = np.empty(n)
    p2 = np.empty(n)
    r2 = np.empty(n)
    for i in range(n):
        pressure = pr.beta[i] * sum(a[i, j] * p[j] for j in range(n) if a[i, j] != 0.0)
        s2[i] = s[i] - h * s[i] * pressure
        p2[i] = p[i] + h * (s[i] * pressure - pr.gamma[i] * p[i])
        r2[i] = r[i] + h * pr.gamma[i] * p[i]
    return EpidemicState(s=s2, p=p2, r=r2)


def sir_step_matrix(state: EpidemicState, params: SirParams, net: Network,
                    strict: bool = True, check_params: bool = True) -> EpidemicState:
    """One SIR step via the matrix form p' = p + h((I - P - R)BA - gamma)p."""
    pr = _gate_sir(state, params, net, strict, check_params)
    h, a = pr.h, net.adjacency
    p, r = state.p, state.r
    s_diag = 1.0 - p - r
    p2 = p + h * (s_diag * (pr.beta * (a @ p)) - pr.gamma * p)
    r2 = r + h * pr.gamma * p
    s2 = 1.0 - p2 - r2
    return EpidemicState(s=s2, p=p2, r=r2)


def _seir_step_core(state: EpidemicState, pr: SeirParams, net: Network,
                    use_layers: bool) -> EpidemicState:
    n, h, a = net.n, pr.h, net.adjacency
    s, e, p, r = state.s, state.e, state.p, state.r
    s2 = np.empty(n)
    e2 = np.empty(n)
    p2 = np.empty(n)
    r2 = np.empty(n)
    for i in range(n):
        iota = (pr.beta_e[i] * sum(a[i, j] * e[j] for j in range(n) if a[i, j] != 0.0)
                + pr.beta[i] * sum(a[i, j] * p[j] for j in range(n) if a[i, j] != 0.0))
        if use_layers:
            for lidx, al in enumerate(net.layers):
                iota += (pr.layer_beta_e[lidx][i]
                         * sum(al[i, j] * e[j] for j in range(n) if al[i, j] != 0.0)
                         + pr.layer_beta[lidx][i]
                         * sum(al[i, j] * p[j] for j in range(n) if al[i, j] != 0.0))
        s2[i] = s[i] - h * s[i] * iota
        e2[i] = e[i] + h * s[i] * iota - h * pr.sigma[i] * e[i]
        p2[i] = p[i] + h * (pr.sigma[i] * e[i] - pr.gamma[i] * p[i])
        r2[i] = r[i] + h * pr.gamma[i] * p[i]
    return EpidemicState(s=s2, e=e2, p=p2, r=r2)


def seir_step(state: EpidemicState, params: SeirParams, net: Network,
              strict: bool = True, check_params: bool = True) -> EpidemicState:
    """One SEIR step on the base network only, explicit per-node sums."""
    pr = _gate_seir(state, params, net, strict, check_params, layers=False)
    return _seir_step_core(state, pr, net, use_layers=False)


def seir_step_multilayer(state: EpidemicState, params: SeirParams, net: Network,
                         strict: bool = True, check_params: bool = True) -> EpidemicState:
    """One SEIR step including transportation-layer infection pressure."""
    pr = _gate_seir(state, params, net, strict, check_params, layers=True)
    return _seir_step_core(state, pr, net, use_layers=True)


def seir_step_matrix(state: EpidemicState, params: SeirParams, net: Network,
                     strict: bool = True, check_params: bool = True) -> EpidemicState:
    """One SEIR step via the matrix form (base network only)."""
    pr = _gate_seir(state, params, net, strict, check_params, layers=False)
    h, a = pr.h, net.adjacency
    s, e, p, r = state.s, state.e, state.p, state.r
    e2 = e + h * (s * (pr.beta_e * (a @ e) + pr.beta * (a @ p)) - pr.sigma * e)
    p2 = p + h * (pr.sigma * e - pr.gamma * p)
    r2 = r + h * pr.gamma * p
    s2 = 1.0 - e2 - p2 - r2
    return EpidemicState(s=s2, e=e2, p=p2, r=r2)


def _fast_step(state: EpidemicState, pr, net: Network, kind: str) -> EpidemicState:
    """Vectorized step on the already-resolved parameters, no re-validation."""
    h, a = pr.h, net.adjacency
    if kind == "sir":
        s, p, r = state.s, state.p, state.r
        pressure = pr.beta * (a @ p)
        s2 = s - h * s * pressure
        p2 = p + h * (s * pressure - pr.gamma * p)
        r2 = r + h * pr.gamma * p
        return EpidemicState(s=s2, p=p2, r=r2)
    s, e, p, r = state.s, state.e, state.p, state.r
    iota = pr.beta_e * (a @ e) + pr.beta * (a @ p)
    for lidx, al in enumerate(net.layers):
        if lidx < len(pr.layer_beta_e):
            iota = iota + pr.layer_beta_e[lidx] * (al @ e) + pr.layer_beta[lidx] * (al @ p)
    s2 = s - h * s * iota
    e2 = e + h * s * iota - h * pr.sigma * e
    p2 = p + h * (pr.sigma * e - pr.gamma * p)
    r2 = r + h * pr.gamma * p
    return EpidemicState(s=s2, e=e2, p=p2, r=r2)


def simulate(initial: EpidemicState, params, net: Network, steps: int,
             strict: bool = True) -> Trajectory:
    """Run ``steps`` steps from ``initial``; returns steps+1 states.

    With ``strict`` on, parameters are checked once up front and every state
    is re-validated against the simplex invariants; drift beyond tolerance
    aborts, since it signals an implementation bug rather than model behavior.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    kind = initial.kind
    if isinstance(params, SirParams):
        if kind != "sir":
            raise ValueError("SirParams require an SIR state")
        pr = params.resolved(net.n)
        if strict:
            check_assumption_sir(pr, net).raise_if_violated()
    elif isinstance(params, SeirParams):
        if kind != "seir":
            raise ValueError("SeirParams require an SEIR state")
        pr = params.resolved(net.n)
        if len(pr.layer_beta_e) != len(net.layers):
            raise ValueError("layer rate count does not match network layer count")
        if strict:
            check_assumption_seir(pr, net).raise_if_violated()
    else:
        raise TypeError("params must be SirParams or SeirParams")
    if strict:
        initial.validate()
    states = [initial]
    cur = initial
    for _ in range(steps):
        cur = _fast_step(cur, pr, net, kind)
        if strict:
            cur.validate()
        states.append(cur)
    return Trajectory(kind=kind, states=tuple(states), h=pr.h)


def trajectory_to_csv(traj: Trajectory) -> str:
    """CSV "k,node,s,e,p,r"; e left blank for SIR; 17 significant digits."""
    fmt = lambda x: format(x, ".17g")
    lines = ["k,node,s,e,p,r"]
    for k, st in enumerate(traj.states):
        for i in range(st.n):
            e = "" if st.e is None else fmt(st.e[i])
            lines.append(f"{k},{i},{fmt(st.s[i])},{e},{fmt(st.p[i])},{fmt(st.r[i])}")
    return "\n".join(lines) + "\n"


def trajectory_from_csv(text: str | Iterable[str], h: float = 1.0) -> Trajectory:
    """Inverse of trajectory_to_csv. ``h`` is supplied by the caller since the
    CSV carries only states."""
    if isinstance(text, str):
        lines = text.splitlines()
    else:
        lines = [ln.rstrip("\n") for ln in text]
    rows = []
    for ln in lines:
        ln = ln.strip()
        if not ln or ln.startswith("k,"):
            continue
        parts = ln.split(",")
        if len(parts) != 6:
            raise ValueError(f"malformed trajectory row: {ln!r}")
        k, node = int(parts[0]), int(parts[1])
        s = float(parts[2])
        e = None if parts[3] == "" else float(parts[3])
        p, r = float(parts[4]), float(parts[5])
        rows.append((k, node, s, e, p, r))
    if not rows:
        raise ValueError("empty trajectory CSV")
    ks = sorted({row[0] for row in rows})
    if ks != list(range(len(ks))):
        raise ValueError("trajectory steps must be contiguous from 0")
    nodes = sorted({row[1] for row in rows})
    n = len(nodes)
    has_e = rows[0][3] is not None
    states = []
    by_step: dict[int, dict[int, tuple]] = {k: {} for k in ks}
    for k, node, s, e, p, r in rows:
        by_step[k][node] = (s, e, p, r)
    for k in ks:
        step = by_step[k]
        if len(step) != n:
            raise ValueError(f"step {k} missing node rows")
        s = np.array([step[i][0] for i in range(n)])
        p = np.array([step[i][2] for i in range(n)])
        r = np.array([step[i][3] for i in range(n)])
        e = np.array([step[i][1] for i in range(n)]) if has_e else None
        states.append(EpidemicState(s=s, p=p, r=r, e=e))
    return Trajectory(kind="seir" if has_e else "sir", states=tuple(states), h=h)
