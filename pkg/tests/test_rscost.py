"""Risk-sensitive cost accumulation and the log-domain Monte-Carlo estimator."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from conftest import make_f2
from mdqueue.game import solve_game
from mdqueue.model import ClassParams, ModelParams, instantiate
from mdqueue.rscost import (RunningCost, delta_truncation_lower_bound,
                            estimate_Jn, merge_value, replication_log_weight,
                            running_cost)
from mdqueue.sim import ao_policy, baseline_policy, run


def quiet_system(hbar=0.5, x0=3.0, mu=0.01, lam=0.4, T_safe=2.0):
    """n = 1, deterministic streams, no arrival or completion before T_safe:
    the state is frozen, so every cost quantity has a closed form."""
    c = ClassParams(lam=lam, mu=mu, var_ia=0.0, var_st=0.0, D=10.0,
                    hbar=hbar, rbar=1.0, ia_dist="deterministic",
                    st_dist="deterministic")
    sys_n = instantiate(ModelParams(classes=(c,), x0=(x0,)), 1)
    assert 1.0 / lam > T_safe and 1.0 / mu > T_safe
    return sys_n


@pytest.fixture(scope="module")
def f2_traj():
    p = make_f2(x0=(1.0, 1.0))
    geom = solve_game(p, 0.1).geometry
    sys_n = instantiate(p, 150)
    return run(sys_n, ao_policy(sys_n, geom), T=1.5, seed=21, acc_weight=True)


class TestRunningCost:
    def test_empty_system_is_zero(self):
        sys_n = quiet_system(x0=0.0)
        traj = run(sys_n, baseline_policy("static-priority", sys_n), T=2.0, seed=0)
        rc = running_cost(traj)
        assert rc.at(0.0) == 0.0 and rc.at(2.0) == 0.0

    def test_frozen_state_is_linear(self):
        sys_n = quiet_system(hbar=0.5, x0=3.0)
        traj = run(sys_n, baseline_policy("static-priority", sys_n), T=2.0, seed=0)
        rc = running_cost(traj)
        # X = 3 jobs at bsn = 1: slope hbar * 3
        for t in (0.5, 1.0, 2.0):
            assert rc.at(t) == pytest.approx(1.5 * t, abs=1e-12)

    def test_rejection_jump_size_and_side(self):
        c = ClassParams(lam=1.0, mu=0.1, var_ia=0.0, var_st=0.0, D=2.0,
                        hbar=1.0, rbar=0.7, ia_dist="deterministic",
                        st_dist="deterministic")
        sys_n = instantiate(ModelParams(classes=(c,), x0=(2.0,)), 1)
        traj = run(sys_n, baseline_policy("full-buffer-reject-only", sys_n),
                   T=1.5, seed=0)
        rc = running_cost(traj)
        # forced rejection at t = 1 jumps H by rbar / bsn, right-continuously
        jump = rc.at(1.0) - rc.at(1.0 - 1e-9)
        assert jump == pytest.approx(0.7, abs=1e-6)

    def test_matches_engine_accumulator(self, f2_traj):
        rc = running_cost(f2_traj)
        assert rc.at(f2_traj.T) == pytest.approx(f2_traj.H_T, abs=1e-12)

    def test_shifted_adds_constant(self, f2_traj):
        rc = running_cost(f2_traj)
        up = rc.shifted(0.3)
        for t in (0.0, 0.7, 1.5):
            assert up.at(t) == pytest.approx(rc.at(t) + 0.3, abs=1e-15)


def line_H(v0, slope, T):
    """Single-segment H over [0, T] in the replay convention (final slope 0)."""
    return RunningCost(np.array([0.0, T]),
                       np.array([v0, v0 + slope * T]),
                       np.array([slope, 0.0]))


class TestReplicationLogWeight:
    def test_zero_cost_gives_log_T(self):
        H = line_H(0.0, 0.0, 7.0)
        for T in (0.5, 1.0, 7.0):
            assert replication_log_weight(H, 2.0, T) == math.log(T)

    def test_unit_slope_closed_form(self):
        got = replication_log_weight(line_H(0.0, 1.0, 1.0), 1.0, 1.0)
        assert got == pytest.approx(math.log(math.e - 1.0), abs=1e-13)

    def test_negative_slope_closed_form(self):
        got = replication_log_weight(line_H(0.0, -1.0, 1.0), 1.0, 1.0)
        assert got == pytest.approx(math.log(1.0 - math.exp(-1.0)), abs=1e-13)

    def test_constant_height(self):
        got = replication_log_weight(line_H(0.4, 0.0, 2.0), 3.0, 2.0)
        assert got == pytest.approx(9.0 * 0.4 + math.log(2.0), abs=1e-13)

    def test_matches_quadrature_on_simulated_cost(self, f2_traj):
        rc = running_cost(f2_traj)
        b = f2_traj.system.b_n
        got = replication_log_weight(rc, b, f2_traj.T)
        pts = rc.times[rc.times < f2_traj.T]
        val, err = quad(lambda t: math.exp(b * b * rc.at(t)), 0.0, f2_traj.T,
                        points=pts, limit=len(pts) + 50)
        assert got == pytest.approx(math.log(val), abs=1e-8)

    def test_shift_identity_exact(self, f2_traj):
        rc = running_cost(f2_traj)
        b = f2_traj.system.b_n
        base = replication_log_weight(rc, b, f2_traj.T)
        up = replication_log_weight(rc.shifted(0.25), b, f2_traj.T)
        assert up - base == pytest.approx(b * b * 0.25, abs=1e-12)

    def test_large_exponent_stable(self):
        # slope pushes b^2 H into the hundreds: must not overflow
        got = replication_log_weight(line_H(0.0, 5.0, 2.0), 10.0, 2.0)
        # integral ~ e^{1000}/500: log = 1000 - log 500
        assert got == pytest.approx(1000.0 - math.log(500.0), abs=1e-9)


class TestEstimator:
    def test_flat_cost_value_is_log_T_over_b_sq(self):
        sys_n = quiet_system(hbar=0.0, x0=0.0)
        pol = baseline_policy("static-priority", sys_n)
        est = estimate_Jn(sys_n, pol, T=0.9, M=8, seed=1)
        assert est.value == math.log(0.9) / sys_n.b_sq
        assert est.ess == pytest.approx(8.0, abs=1e-9)
        assert not est.heavy_tail

    def test_deterministic_holding_closed_form(self):
        sys_n = quiet_system(hbar=0.5, x0=3.0)  # b^2 = 1, slope 1.5
        pol = baseline_policy("static-priority", sys_n)
        est = estimate_Jn(sys_n, pol, T=2.0, M=4, seed=1)
        want = math.log(math.expm1(3.0) / 1.5)
        assert est.value == pytest.approx(want, abs=1e-12)

    def test_rejects_tiny_M(self):
        sys_n = quiet_system()
        with pytest.raises(ValueError):
            estimate_Jn(sys_n, baseline_policy("static-priority", sys_n),
                        T=1.0, M=1, seed=0)

    def test_reproducible_and_schedule_independent(self):
        p = make_f2()
        geom = solve_game(p, 0.1).geometry
        sys_n = instantiate(p, 50)
        pol = ao_policy(sys_n, geom)
        a = estimate_Jn(sys_n, pol, T=1.0, M=16, seed=5, workers=1)
        b = estimate_Jn(sys_n, pol, T=1.0, M=16, seed=5, workers=2)
        assert a.value == b.value
        np.testing.assert_array_equal(a.log_weights, b.log_weights)

    def test_diagnostics_wired_to_definitions(self):
        p = make_f2()
        geom = solve_game(p, 0.1).geometry
        sys_n = instantiate(p, 50)
        est = estimate_Jn(sys_n, ao_policy(sys_n, geom), T=1.0, M=24, seed=7)
        assert 0.0 < est.ess <= est.replications
        assert est.heavy_tail == (est.ess < 0.05 * est.replications)
        lw = est.log_weights
        mx = np.max(lw)
        want = (mx + math.log(np.mean(np.exp(lw - mx)))) / sys_n.b_sq
        assert est.value == pytest.approx(want, abs=1e-15)


class TestMergeAndBounds:
    def test_shard_merge_invariance(self):
        rng = np.random.default_rng(6)
        lw = rng.normal(size=64) * 3.0
        b_sq = 2.5
        whole = merge_value([lw], b_sq)
        split = merge_value(np.array_split(lw, 7), b_sq)
        assert whole == pytest.approx(split, abs=1e-12)
        perm = merge_value([lw[rng.permutation(64)]], b_sq)
        assert whole == pytest.approx(perm, abs=1e-12)

    def test_merge_matches_direct_formula(self):
        lw = np.array([0.0, 0.0, 0.0])
        assert merge_value([lw], 4.0) == pytest.approx(0.0, abs=1e-15)

    def test_delta_truncation_lower_bound(self):
        p = make_f2(x0=(1.0, 1.0))
        geom = solve_game(p, 0.1).geometry
        sys_n = instantiate(p, 100)
        pol = ao_policy(sys_n, geom)
        T, M = 1.5, 16
        trajs = [run(sys_n, pol, T=T, seed=9, seed_words=(9, m), acc_weight=True)
                 for m in range(M)]
        rcosts = [running_cost(t) for t in trajs]
        value = merge_value([np.array([t.log_weight for t in trajs])], sys_n.b_sq)
        for delta in (0.1, 0.5, 1.4):
            bound = delta_truncation_lower_bound(rcosts, sys_n.b_n, T, delta)
            assert value >= bound - 1e-12
