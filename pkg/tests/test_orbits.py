import numpy as np
import pytest

from boostbif import (GrazingError, averaged_orbit_seed, averaged_poles,
                      build_pvmc_model, classify_stability, dc_orbit,
                      duty_solutions, find_periodic_orbit, fixed_duty_orbit,
                      floquet_multipliers, state_scale, stroboscopic_map,
                      vr_of_duty)
from boostbif.orbits import Orbit, _map_k
from boostbif.sim import get_engine


class TestStroboscopicMap:
    def test_equals_one_cycle_simulation(self, ex1_model):
        from boostbif import simulate_cycles
        x = np.array([12.0, 6.0])
        via_map = stroboscopic_map(ex1_model, 7.0, x)
        via_sim = simulate_cycles(ex1_model, x, 7.0, 1).final_state()
        np.testing.assert_array_equal(via_map, via_sim)

    def test_fixed_point_invariance(self, ex1_model):
        orb = find_periodic_orbit(ex1_model, 7.0,
                                  averaged_orbit_seed(ex1_model, 7.0, 0.7394))
        out = stroboscopic_map(ex1_model, 7.0, orb.x_star)
        scale = state_scale(ex1_model)
        assert np.linalg.norm((out - orb.x_star) / scale) <= 1e-10

    def test_local_linearity(self, ex1_model):
        # away from grazing the map is differentiable: response to delta and
        # delta/2 should agree to first order
        orb = find_periodic_orbit(ex1_model, 7.0,
                                  averaged_orbit_seed(ex1_model, 7.0, 0.7394))
        x = orb.x_star
        base = stroboscopic_map(ex1_model, 7.0, x)
        delta = np.array([1e-4, -5e-5])
        d1 = stroboscopic_map(ex1_model, 7.0, x + delta) - base
        d2 = stroboscopic_map(ex1_model, 7.0, x + delta / 2) - base
        np.testing.assert_allclose(d1, 2 * d2, rtol=1e-3)


class TestFindPeriodicOrbit:
    def test_ex1_coexisting_pair(self, ex1_model):
        duties = duty_solutions(ex1_model.params, 7.0)
        got = []
        for d in duties:
            orb = find_periodic_orbit(ex1_model, 7.0,
                                      averaged_orbit_seed(ex1_model, 7.0, d))
            assert orb.converged and orb.residual <= 1e-10
            assert orb.classification == "unstable"
            got.append(orb.duty)
        assert got[0] == pytest.approx(0.74, abs=0.01)
        assert got[1] == pytest.approx(0.81, abs=0.01)

    def test_ex2_stable_and_unstable(self, ex2_model):
        duties = duty_solutions(ex2_model.params, 30.3)
        lo = find_periodic_orbit(ex2_model, 30.3,
                                 averaged_orbit_seed(ex2_model, 30.3, duties[0]))
        hi = find_periodic_orbit(ex2_model, 30.3,
                                 averaged_orbit_seed(ex2_model, 30.3, duties[1]))
        assert lo.converged and lo.duty == pytest.approx(0.80, abs=0.005)
        assert lo.classification == "stable"
        assert np.all(np.abs(lo.multipliers) < 1.0)
        assert hi.converged and hi.duty == pytest.approx(0.87, abs=0.005)
        assert hi.classification == "unstable"

    def test_ex3_period_doubled_orbit(self, ex3_model):
        # past the period doubling the 2T solution is the attractor: settle
        # onto it by simulation, then polish the subharmonic fixed point
        from boostbif import simulate_cycles
        d0 = duty_solutions(ex3_model.params, 8.4)[0]
        x0 = averaged_orbit_seed(ex3_model, 8.4, d0) * 1.001
        settled = simulate_cycles(ex3_model, x0, 8.4, 600,
                                  record_samples=False).final_state()
        orb = find_periodic_orbit(ex3_model, 8.4, settled, period_mult=2)
        assert orb.converged
        assert orb.period_mult == 2
        assert len(orb.duties) == 2
        assert abs(orb.duties[0] - orb.duties[1]) > 0.05

    def test_newton_converges_quadratically(self, ex1_model):
        # residual history from a deliberately rough seed
        engine = get_engine(ex1_model)
        scale = state_scale(ex1_model)
        seed = averaged_orbit_seed(ex1_model, 7.0, 0.7394) * 1.02
        residuals = []
        x = seed.copy()
        for _ in range(6):
            fx, _ = _map_k(engine, 7.0, x, 1)
            residuals.append(np.linalg.norm((fx - x) / scale))
            orb = find_periodic_orbit(ex1_model, 7.0, x, max_iter=1)
            x = orb.x_star
        drops = [residuals[i + 1] / residuals[i] for i in range(3)
                 if residuals[i] > 1e-12]
        assert min(drops) < 0.05  # at least one strongly contracting step

    def test_nonconvergence_is_flagged(self, ex1_model):
        seed = averaged_orbit_seed(ex1_model, 7.0, 0.7394) * 1.5
        orb = find_periodic_orbit(ex1_model, 7.0, seed, max_iter=1)
        assert not orb.converged
        assert orb.classification == "no-convergence"


class TestFixedDutyOrbit:
    def test_reproduces_converged_orbits(self, ex1_model, ex3_model):
        # two independent routes to the same object: Newton on the sampled
        # map vs. the frozen-switching-time linear solve
        for model, vr in ((ex1_model, 7.0), (ex3_model, 16.0)):
            for d in duty_solutions(model.params, vr):
                orb = find_periodic_orbit(
                    model, vr, averaged_orbit_seed(model, vr, d))
                if not orb.converged or orb.classification == "saturated-dc":
                    continue
                vr_back, x0 = fixed_duty_orbit(model, orb.duty)
                assert vr_back == pytest.approx(vr, rel=1e-9)
                scale = state_scale(model)
                assert np.linalg.norm((x0 - orb.x_star) / scale) < 1e-8

    def test_matches_averaged_reference_curve(self, ex1_model):
        # switched and averaged reference curves agree to ripple order
        for d in (0.3, 0.5, 0.7):
            vr_sw, _ = fixed_duty_orbit(ex1_model, d)
            assert vr_sw == pytest.approx(vr_of_duty(ex1_model.params, d),
                                          rel=0.01)


class TestFloquetMultipliers:
    def test_saddle_character_on_upper_branch(self, ex1_model):
        orb = find_periodic_orbit(ex1_model, 7.0,
                                  averaged_orbit_seed(ex1_model, 7.0, 0.8145))
        mult = orb.multipliers
        real = mult[np.abs(mult.imag) < 1e-9]
        assert np.sum(real.real > 1.0) == 1

    def test_step_halving_stability(self, ex1_model):
        orb = find_periodic_orbit(ex1_model, 7.0,
                                  averaged_orbit_seed(ex1_model, 7.0, 0.7394))
        engine = get_engine(ex1_model)
        x = orb.x_star

        def multipliers_with_step(shrink):
            J = np.empty((2, 2))
            for i in range(2):
                h = max(1e-6, 1e-6 * abs(x[i])) / shrink
                xp, xm = x.copy(), x.copy()
                xp[i] += h
                xm[i] -= h
                J[:, i] = (_map_k(engine, 7.0, xp, 1)[0]
                           - _map_k(engine, 7.0, xm, 1)[0]) / (2 * h)
            return np.sort_complex(np.linalg.eigvals(J))

        m1 = multipliers_with_step(1)
        m2 = multipliers_with_step(2)
        assert np.all(np.abs(m1 - m2) <= 1e-4 * np.abs(m1))

    def test_matches_averaged_poles_at_high_frequency(self, ex1_params):
        # at f_s = 6 MHz averaging is accurate: multipliers ~ exp(s T)
        p = ex1_params.replace(f_s=6e6)
        m = build_pvmc_model(p)
        d_target = 0.3
        vr = vr_of_duty(p, d_target)
        orb = find_periodic_orbit(m, vr, averaged_orbit_seed(m, vr, d_target))
        assert orb.converged
        expected = np.sort_complex(
            np.array([np.exp(s * p.T) for s in averaged_poles(p, orb.duty)]))
        got = np.sort_complex(orb.multipliers)
        np.testing.assert_allclose(got, expected, rtol=0.05)

    def test_duty_consistent_with_averaged_reference(self, ex1_model):
        for vr in (4.0, 5.5, 6.5):
            d0 = duty_solutions(ex1_model.params, vr)[0]
            orb = find_periodic_orbit(ex1_model, vr,
                                      averaged_orbit_seed(ex1_model, vr, d0))
            assert vr_of_duty(ex1_model.params, orb.duty) == pytest.approx(
                vr, rel=0.01)

    def test_grazing_is_signalled(self, ex1_model):
        orb = Orbit(model=ex1_model, v_r=5.0, period_mult=1,
                    x_star=np.array([10.0, 5.0]), duties=(1.0 - 1e-8,),
                    residual=0.0, converged=True)
        with pytest.raises(GrazingError):
            floquet_multipliers(ex1_model, orb)


class TestDcOrbit:
    def test_exists_in_saturated_region(self, ex1_model):
        orb = dc_orbit(ex1_model, 7.5)
        assert orb is not None
        assert orb.classification == "saturated-dc"
        np.testing.assert_allclose(orb.x_star, [30.0, 0.0], atol=1e-12)
        assert np.all(np.abs(orb.multipliers) < 1.0)

    def test_absent_when_comparator_trips(self, ex1_model):
        # k_p v_r < V_h: the ramp catches the constant output
        assert dc_orbit(ex1_model, 0.2) is None

    def test_absent_without_parasitic_resistance(self, ex1_params):
        m = build_pvmc_model(ex1_params.replace(r=0.0))
        assert dc_orbit(m, 7.5) is None


class TestClassifyStability:
    def test_plain_stable(self):
        info = classify_stability(np.array([0.5, 0.3]))
        assert info.label == "stable" and info.n_unstable == 0
        assert info.tag is None

    def test_snb_proximal(self):
        info = classify_stability(np.array([1.001, 0.4]))
        assert info.label == "unstable" and info.n_unstable == 1
        assert info.tag == "snb"

    def test_neimark_proximal(self):
        pair = 0.98 * np.exp(1j * np.array([0.7, -0.7]))
        info = classify_stability(pair)
        assert info.label == "stable"
        assert info.tag == "neimark"

    def test_pdb_proximal(self):
        info = classify_stability(np.array([-1.01, 0.2]))
        assert info.label == "unstable"
        assert info.tag == "pdb"

    def test_margin(self):
        assert classify_stability(np.array([0.995, 0.1]),
                                  margin=0.01).label == "unstable"


class TestOrbitCsv:
    def test_round_trip_layout(self, ex1_model, tmp_path):
        orb = find_periodic_orbit(ex1_model, 7.0,
                                  averaged_orbit_seed(ex1_model, 7.0, 0.7394))
        path = tmp_path / "orbit.csv"
        orb.to_csv(path)
        header, row = path.read_text().splitlines()
        cols = header.split(",")
        vals = row.split(",")
        assert len(cols) == len(vals)
        assert "x_i_L" in cols and "classification" in cols
        assert vals[cols.index("classification")] == "unstable"
