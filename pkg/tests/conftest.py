import numpy as np
import pytest

from netepi import EpidemicState, Network, SeirParams, SirParams


# ---------------------------------------------------------------------------
# Shared fixtures: the 2-node worked examples used across modules.

@pytest.fixture
def two_node_net():
    return Network(np.array([[0.0, 1.0], [1.0, 0.0]]))


@pytest.fixture
def sir_example(two_node_net):
    params = SirParams(beta=0.5, gamma=0.2, h=0.1)
    state = EpidemicState(s=np.array([0.9, 1.0]), p=np.array([0.1, 0.0]),
                          r=np.zeros(2))
    return two_node_net, params, state


@pytest.fixture
def seir_example(two_node_net):
    params = SeirParams(beta_e=0.04, beta=0.06, sigma=0.4, gamma=0.3, h=1.0)
    state = EpidemicState(s=np.array([0.95, 1.0]), e=np.array([0.02, 0.0]),
                          p=np.array([0.03, 0.0]), r=np.zeros(2))
    return two_node_net, params, state


# ---------------------------------------------------------------------------
# Random-instance generators.

def random_irreducible_network(rng, n, extra_prob=0.2):
    """Bidirectional ring (guarantees strong connectivity) plus random extras."""
    a = np.zeros((n, n))
    for i in range(n):
        a[i, (i + 1) % n] = rng.uniform(0.5, 1.5)
        a[(i + 1) % n, i] = rng.uniform(0.5, 1.5)
    mask = rng.random((n, n)) < extra_prob
    a[mask] += rng.uniform(0.2, 1.0, size=int(mask.sum()))
    return Network(a)


def random_sir_params(rng, net, h=1.0):
    rowmax = max(net.adjacency.sum(axis=1).max(), 1e-12)
    beta = rng.uniform(0.05, 0.9) / (h * rowmax)
    gamma = rng.uniform(0.1, 0.9) / h
    return SirParams(beta=beta, gamma=gamma, h=h)


def random_seir_params(rng, net, h=1.0):
    rowmax = max(net.adjacency.sum(axis=1).max(), 1e-12)
    total = rng.uniform(0.05, 0.9) / (h * rowmax)
    split = rng.uniform(0.1, 0.9)
    return SeirParams(beta_e=total * split, beta=total * (1 - split),
                      sigma=rng.uniform(0.1, 1.0) / h,
                      gamma=rng.uniform(0.1, 0.9) / h, h=h)


def random_simplex_state(rng, n, kind):
    comps = 3 if kind == "sir" else 4
    levels = rng.dirichlet(np.ones(comps), size=n)
    if kind == "sir":
        return EpidemicState(s=levels[:, 0], p=levels[:, 1], r=levels[:, 2])
    return EpidemicState(s=levels[:, 0], e=levels[:, 1], p=levels[:, 2],
                         r=levels[:, 3])


def seeded_state(n, kind, e_seeds=(), p_seeds=()):
    """Mostly-susceptible state with a few seeded nodes, as in the scenarios."""
    e = np.zeros(n)
    p = np.zeros(n)
    for i, v in e_seeds:
        e[i] = v
    for i, v in p_seeds:
        p[i] = v
    if kind == "sir":
        return EpidemicState(s=1.0 - p, p=p, r=np.zeros(n))
    return EpidemicState(s=1.0 - e - p, e=e, p=p, r=np.zeros(n))


# ---------------------------------------------------------------------------
# Independent oracles.

def charpoly_spectral_radius(m):
    """Spectral radius via Faddeev-LeVerrier characteristic-polynomial
    coefficients and companion-matrix root finding; independent of the
    power-iteration path it checks."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    coeffs = np.zeros(n + 1)
    coeffs[0] = 1.0
    mk = np.zeros_like(m)
    for k in range(1, n + 1):
        mk = m @ mk + coeffs[k - 1] * m
        coeffs[k] = -np.trace(mk) / k
    roots = np.roots(coeffs)
    return float(np.max(np.abs(roots)))


def brute_force_strongly_connected(m):
    """Path existence between all ordered pairs via boolean pattern powers."""
    pattern = (np.asarray(m) > 0)
    n = pattern.shape[0]
    reach = np.zeros((n, n), dtype=bool)
    power = np.eye(n, dtype=bool)
    for _ in range(n):
        power = power @ pattern
        reach |= power
    return bool(reach.all())
