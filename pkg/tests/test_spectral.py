import numpy as np
import pytest

from netepi import (EpidemicState, Network, SeirParams, SirParams,
                    build_spreading_matrix, convergence_diagnostics,
                    dominant_eigenvalue, seir_step, simulate, sir_step)
from netepi.spectral import report_to_csv, report_to_json

from conftest import (charpoly_spectral_radius, random_irreducible_network,
                      random_seir_params, seeded_state)


class TestBuildSpreadingMatrix:
    def test_depleted_susceptibles_block_triangular(self, two_node_net):
        params = SeirParams(beta_e=0.04, beta=0.06, sigma=0.4, gamma=0.3, h=1.0)
        state = EpidemicState(s=np.zeros(2), e=np.array([0.5, 0.5]),
                              p=np.array([0.2, 0.2]), r=np.array([0.3, 0.3]))
        m = build_spreading_matrix(state, params, two_node_net).m
        assert np.array_equal(m[:2, 2:], np.zeros((2, 2)))
        assert m[0, 0] == pytest.approx(0.6) and m[1, 1] == pytest.approx(0.6)
        assert m[2, 2] == pytest.approx(0.7) and m[3, 3] == pytest.approx(0.7)
        assert m[2, 0] == pytest.approx(0.4)

    def test_hand_entry(self, seir_example):
        net, params, state = seir_example
        m = build_spreading_matrix(state, params, net).m
        # upper-left block off-diagonal: h * s_0 * beta_e * a_01
        assert m[0, 1] == pytest.approx(0.95 * 0.04, abs=1e-15)

    def test_propagates_infectious_coordinates(self, seir_example):
        net, params, state = seir_example
        m = build_spreading_matrix(state, params, net).m
        z = np.concatenate([state.e, state.p])
        nxt = seir_step(state, params, net)
        z_next = np.concatenate([nxt.e, nxt.p])
        assert m @ z == pytest.approx(z_next, abs=1e-13)

    def test_sir_matrix_propagates_p(self, sir_example):
        net, params, state = sir_example
        m = build_spreading_matrix(state, params, net).m
        assert m.shape == (2, 2)
        nxt = sir_step(state, params, net)
        assert m @ state.p == pytest.approx(nxt.p, abs=1e-13)

    def test_dimension_mismatch(self, seir_example):
        _, params, state = seir_example
        with pytest.raises(ValueError):
            build_spreading_matrix(state, params, Network(np.zeros((3, 3))))


class TestDominantEigenvalue:
    def test_triangular(self):
        val, vec = dominant_eigenvalue(np.array([[0.6, 0.0], [0.4, 0.7]]))
        assert val == pytest.approx(0.7, abs=1e-10)
        assert vec.sum() == pytest.approx(1.0)
        assert np.all(vec >= 0)

    def test_permutation(self):
        val, _ = dominant_eigenvalue(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert val == pytest.approx(1.0, abs=1e-10)

    def test_zero_matrix(self):
        val, _ = dominant_eigenvalue(np.zeros((3, 3)))
        assert val == pytest.approx(0.0, abs=1e-12)

    def test_rejects_negative_entry(self):
        with pytest.raises(ValueError):
            dominant_eigenvalue(np.array([[0.0, -1.0], [1.0, 0.0]]))

    def test_matches_charpoly_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            n = rng.integers(2, 5)
            m = rng.random((n, n))
            val, _ = dominant_eigenvalue(m)
            assert val == pytest.approx(charpoly_spectral_radius(m), abs=1e-8)

    def test_left_eigenvector_residual(self):
        rng = np.random.default_rng(2)
        m = rng.random((5, 5))
        val, vec = dominant_eigenvalue(m)
        assert np.abs(vec @ m - val * vec).max() < 1e-9

    def test_monotone_in_entries(self):
        rng = np.random.default_rng(23)
        for _ in range(30):
            n = rng.integers(2, 6)
            m = rng.random((n, n)) + 0.05
            val, _ = dominant_eigenvalue(m)
            bumped = m.copy()
            bumped[rng.integers(n), rng.integers(n)] += rng.uniform(0.1, 1.0)
            val2, _ = dominant_eigenvalue(bumped)
            assert val2 >= val - 1e-10


class TestConvergenceDiagnostics:
    def test_no_infection_rate_undefined(self, two_node_net):
        params = SeirParams(beta_e=0.04, beta=0.06, sigma=0.4, gamma=0.3, h=1.0)
        state = EpidemicState(s=np.ones(2), e=np.zeros(2), p=np.zeros(2),
                              r=np.zeros(2))
        traj = simulate(state, params, two_node_net, 5)
        report = convergence_diagnostics(traj, params, two_node_net)
        assert report.linear_rate_estimate is None
        assert np.ptp(report.lambda_seq) < 1e-10
        assert report.extinction_step == 0

    def test_irreducible_run_monotone_with_kbar(self):
        rng = np.random.default_rng(9)
        net = random_irreducible_network(rng, 6)
        params = random_seir_params(rng, net)
        initial = seeded_state(6, "seir", e_seeds=[(0, 0.05)], p_seeds=[(1, 0.02)])
        traj = simulate(initial, params, net, 800)
        report = convergence_diagnostics(traj, params, net)
        assert report.monotone
        assert report.k_bar is not None
        assert report.lambda_seq[report.k_bar] < 1.0
        if report.extinction_step is not None:
            assert report.linear_rate_estimate is not None
            assert 0 < report.linear_rate_estimate < 1

    def test_depleted_limit_eigenvalue(self):
        # heavy seeding + strong transmission drives s toward 0, where the
        # dominant eigenvalue approaches max(1 - h*sigma, 1 - h*gamma)
        net = Network(np.array([[0.0, 1.0], [1.0, 0.0]]))
        params = SeirParams(beta_e=0.45, beta=0.45, sigma=0.9, gamma=0.25, h=1.0)
        initial = EpidemicState(s=np.array([0.05, 0.05]), e=np.array([0.7, 0.7]),
                                p=np.array([0.25, 0.25]), r=np.zeros(2))
        traj = simulate(initial, params, net, 200)
        report = convergence_diagnostics(traj, params, net)
        # residual susceptibles keep the terminal value a few e-3 above the limit
        limit = max(1 - 0.9, 1 - 0.25)
        assert limit - 1e-9 <= report.lambda_seq[-1] <= limit + 5e-3

    def test_too_short(self, seir_example):
        net, params, state = seir_example
        from netepi.dynamics import Trajectory
        with pytest.raises(ValueError, match="short"):
            convergence_diagnostics(Trajectory("seir", (state,), 1.0), params, net)

    def test_serialization(self, seir_example):
        net, params, state = seir_example
        traj = simulate(state, params, net, 10)
        report = convergence_diagnostics(traj, params, net)
        csv = report_to_csv(report)
        assert csv.splitlines()[0] == "k,lambda_max,p_norm"
        assert len(csv.splitlines()) == len(traj) + 1
        import json
        summary = json.loads(report_to_json(report))
        assert set(summary) == {"k_bar", "monotone", "linear_rate_estimate",
                                "extinction_step"}
