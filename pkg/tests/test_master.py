"""Master-equation terms: conservation laws, fixed points, integration."""

import numpy as np
import pytest

import cartelsim as cs
from cartelsim import master


def random_grid(K, k_max, N_w, seed):
    rng = np.random.default_rng(seed)
    P = rng.random((k_max + 1, N_w))
    P /= P.sum()
    return cs.DistributionGrid(K=K, k_max=k_max, N_w=N_w, P=P)


class TestGrids:
    def test_uniform_grid_valid(self):
        g = cs.uniform_grid(3, N_w=32)
        g.validate()
        assert g.total_mass() == pytest.approx(1.0, abs=1e-12)
        assert g.mean_degree() == pytest.approx(3.0, abs=1e-9)
        assert g.w_values[0] == 0.0 and g.w_values[-1] == 1.0

    def test_single_column_grid(self):
        g = cs.single_column_grid(2, w_index=5, N_w=16)
        g.validate()
        assert np.all(g.P[:, :5] == 0.0) and np.all(g.P[:, 6:] == 0.0)

    def test_perturbed_ones_grid(self):
        g = cs.perturbed_ones_grid(1, eps=1e-6, pert_index=8, N_w=16)
        g.validate()
        assert g.P[:, 8].sum() == pytest.approx(1e-6, rel=1e-3)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="shape"):
            cs.DistributionGrid(K=1, k_max=4, N_w=4, P=np.zeros((4, 4)))


class TestMeanW:
    def test_all_mass_at_one(self):
        g = cs.single_column_grid(1, w_index=15, N_w=16)
        assert cs.mean_w(g) == pytest.approx(1.0, abs=1e-12)

    def test_uniform_five_columns(self):
        g = cs.uniform_grid(1, N_w=5)
        assert cs.mean_w(g) == pytest.approx(0.5, abs=1e-12)

    def test_matches_double_loop(self):
        g = random_grid(2, 12, 9, seed=1)
        brute = sum(g.w_values[j] * g.P[k, j]
                    for k in range(13) for j in range(9))
        assert cs.mean_w(g) == pytest.approx(brute, abs=1e-15)


class TestGammaTerm:
    def test_single_column_inert(self):
        g = cs.single_column_grid(3, w_index=7, N_w=16)
        assert np.abs(cs.gamma_term(g)).max() == 0.0

    def test_two_column_hand_case(self):
        # all mass at k=1, split half/half between w=0 and w=1; the w=1
        # column earns nothing and adopts w=0, so (hand evaluation)
        # gamma(1, w=0) = P(1,1)*P(1,0) = 0.25 and the opposite column
        # loses the same amount
        g = cs.DistributionGrid(K=1, k_max=1, N_w=2,
                                P=np.array([[0.0, 0.0], [0.5, 0.5]]))
        gam = cs.gamma_term(g)
        np.testing.assert_allclose(gam, [[0.0, 0.0], [0.25, -0.25]], atol=1e-15)

    def test_per_k_mass_conserved_random(self):
        for trial in range(100):
            g = random_grid(2, 15, 8, seed=trial)
            gam = cs.gamma_term(g)
            assert np.abs(gam.sum(axis=1)).max() < 1e-12

    def test_positive_payoff_tie_flows_both_ways(self):
        # classes (k=1, w=1/3) and (k=2, w=2/3) tie: 1*(2/3) = 2*(1/3);
        # with mass only there, both columns exchange equal flow
        g = cs.DistributionGrid(K=1, k_max=2, N_w=4, P=np.zeros((3, 4)))
        g.P[1, 1] = 0.5
        g.P[2, 2] = 0.5
        gam = cs.gamma_term(g)
        # gain at (1,2) from (1,1): threshold k'' * (1/3) >= 1 * (2/3) -> k'' >= 2: P(2, w=2/3)=0.5
        assert gam[1, 2] == pytest.approx(0.5 * 0.5, abs=1e-15)
        # gain at (2,1) from (2,2): threshold k'' * (2/3) >= 2 * (1/3) -> k'' >= 1: P(1, w=1/3)=0.5
        assert gam[2, 1] == pytest.approx(0.5 * 0.5, abs=1e-15)


class TestXiTerm:
    def test_single_column_poisson_stationary(self):
        g = cs.single_column_grid(3, w_index=4, N_w=8)
        assert np.abs(cs.xi_term(g)).max() < 1e-12

    def test_per_w_mass_conserved_random(self):
        for trial in range(100):
            g = random_grid(3, 18, 6, seed=1000 + trial)
            xi = cs.xi_term(g)
            assert np.abs(xi.sum(axis=0)).max() < 1e-12

    def test_edges_conserved_random(self):
        ks = np.arange(19)
        for trial in range(100):
            g = random_grid(3, 18, 6, seed=2000 + trial)
            xi = cs.xi_term(g)
            assert abs((ks[:, None] * xi).sum()) < 1e-10


class TestFixedPoint:
    @pytest.mark.parametrize("a", [0.0, 0.3, 0.9])
    def test_single_column_full_rhs_zero(self, a):
        g = cs.single_column_grid(3, w_index=5, N_w=16)
        rhs = cs.master_rhs(g, a)
        assert np.abs(rhs).max() < 1e-12


class TestIntegrate:
    def test_mean_w_constant_at_fixed_point(self):
        g = cs.single_column_grid(1, w_index=9, N_w=16, k_max=30)
        traj = cs.integrate(g, a=0.5, dt=0.1, t_end=100.0, sample_every=10.0)
        assert np.abs(traj.mean_w - traj.mean_w[0]).max() < 1e-10

    def test_conservation_without_renormalization(self):
        g = cs.uniform_grid(2, N_w=24, k_max=40)
        traj = cs.integrate(g, a=0.3, dt=0.1, t_end=200.0, sample_every=20.0,
                            renormalize=False)
        assert traj.max_mass_drift < 1e-10
        assert traj.final_grid.mean_degree() == pytest.approx(2.0, abs=1e-8)

    def test_growth_and_decay_bracket_critical_point(self):
        a_c = cs.find_critical_a(1, tol=1e-4).a_c
        for factor, grows in ((0.9, False), (1.1, True)):
            g = cs.perturbed_ones_grid(1, eps=1e-6, pert_index=8, N_w=16, k_max=40)
            traj = cs.integrate(g, a=factor * a_c, dt=0.05, t_end=120.0,
                                sample_every=60.0, snapshot_times=(60.0, 120.0))
            (t1, P1), (t2, P2) = traj.snapshots
            m1 = P1[1:, 8].sum()
            m2 = P2[1:, 8].sum()
            assert (m2 > m1) == grows

    def test_clip_abort_raises_for_huge_dt(self):
        g = cs.uniform_grid(1, N_w=16, k_max=40)
        with pytest.raises(RuntimeError, match="dt"):
            cs.integrate(g, a=0.7, dt=20.0, t_end=200.0, sample_every=20.0,
                         on_clip="abort")

    def test_clip_halve_recovers_from_huge_dt(self):
        g = cs.uniform_grid(1, N_w=16, k_max=40)
        traj = cs.integrate(g, a=0.7, dt=2.0, t_end=40.0, sample_every=4.0)
        assert traj.dt < 2.0
        assert np.isfinite(traj.mean_w).all()

    def test_refinement_subcritical_trajectories_agree(self):
        a = 0.45  # below a_c(1): smooth relaxation
        trajs = []
        for N_w in (32, 64):
            g = cs.uniform_grid(1, N_w=N_w, k_max=40)
            trajs.append(cs.integrate(g, a=a, dt=0.1, t_end=500.0, sample_every=5.0))
        diff = np.abs(trajs[0].mean_w - trajs[1].mean_w).max()
        assert diff < 0.05

    def test_mutation_term_keeps_conservation(self):
        g = cs.uniform_grid(2, N_w=16, k_max=40)
        traj = cs.integrate(g, a=0.3, dt=0.1, t_end=50.0, sample_every=10.0,
                            renormalize=False, mutation_rate=1e-3)
        assert traj.max_mass_drift < 1e-10
        assert traj.final_grid.mean_degree() == pytest.approx(2.0, abs=1e-8)

    def test_validation(self):
        g = cs.uniform_grid(1, N_w=8, k_max=30)
        with pytest.raises(ValueError):
            cs.integrate(g, a=0.5, dt=0.0)
        with pytest.raises(ValueError):
            cs.integrate(g, a=1.5)
        with pytest.raises(ValueError):
            cs.integrate(g, a=0.5, on_clip="explode")


def test_threshold_table_payoff_inequality():
    # thresholds reproduce k'' * c_dst >= k * c_src in exact integers,
    # with zero-payoff sources requiring strictly positive payoff evidence
    k_max, N_w = 6, 5
    thr = cs.threshold_table(k_max, N_w)
    c = (N_w - 1) - np.arange(N_w)
    for k in range(k_max + 1):
        for src in range(N_w):
            for dst in range(N_w):
                if c[dst] == 0:
                    assert thr[k, src, dst] == k_max + 1
                elif k * c[src] == 0:
                    assert thr[k, src, dst] == 1
                else:
                    want = -(-(k * c[src]) // c[dst])
                    assert thr[k, src, dst] == min(want, k_max + 1)
