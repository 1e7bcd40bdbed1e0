import numpy as np
import pytest

from boostbif import (CmcOpenLoop, ConverterParams, Pvmc, VmcType3,
                      build_cmc_model, build_pvmc_model, build_type3_model,
                      realize_type3)


def direct_type3_tf(comp, s):
    """Evaluate the compensator transfer function from its factored form."""
    return (comp.K_c * (1 + s / comp.z1) * (1 + s / comp.z2)
            / (s * (1 + s / comp.p1) * (1 + s / comp.p2)))


class TestPvmcModel:
    def test_matrix_entries_match_circuit(self, ex1_params, ex1_model):
        p, m = ex1_params, ex1_model
        assert m.N == 2
        assert m.A1[0, 0] == -(p.r / p.L)
        assert m.A1[0, 0] == pytest.approx(-1e5)
        assert m.A2[0, 1] == -(1.0 / p.L) == pytest.approx(-1e6)
        assert m.A2[1, 0] == 1.0 / p.C_f
        assert np.array_equal(m.C_row, [0.0, -2.0])
        assert np.array_equal(m.D_row, [0.0, 2.0])
        np.testing.assert_array_equal(m.B1, m.B2)
        assert m.B1[0, 0] == 1.0 / p.L

    def test_output_row_picks_v_c_without_esr(self, ex1_model):
        assert np.array_equal(ex1_model.E1, [0.0, 1.0])
        assert np.array_equal(ex1_model.E2, [0.0, 1.0])
        assert np.array_equal(ex1_model.E, [0.0, 1.0])

    def test_zero_parasitic_resistance(self, ex1_params):
        m = build_pvmc_model(ex1_params.replace(r=0.0))
        assert m.A1[0, 0] == 0.0

    def test_mean_output_row_exact(self, ex1_model, ex2_model, ex3_model):
        for m in (ex1_model, ex2_model, ex3_model):
            assert np.array_equal(m.E, (m.E1 + m.E2) / 2.0)

    def test_esr_reduces_to_ideal(self, ex1_params):
        ideal = build_pvmc_model(ex1_params)
        with_esr = build_pvmc_model(ex1_params.replace(R_c=1e-9))
        np.testing.assert_allclose(with_esr.A1, ideal.A1, rtol=1e-6)
        np.testing.assert_allclose(with_esr.A2, ideal.A2, rtol=1e-6)
        np.testing.assert_allclose(with_esr.E1, ideal.E1, rtol=1e-6, atol=1e-8)
        np.testing.assert_allclose(with_esr.E2, ideal.E2, rtol=1e-6, atol=1e-8)

    def test_esr_splits_output_rows(self, ex2_model):
        assert not np.array_equal(ex2_model.E1, ex2_model.E2)
        assert ex2_model.E2[0] > 0.0  # inductor current reaches v_o in stage 2

    def test_rejects_wrong_scheme(self, ex3_params):
        with pytest.raises(ValueError):
            build_pvmc_model(ex3_params)

    def test_builders_are_pure(self, ex1_params):
        a = build_pvmc_model(ex1_params)
        b = build_pvmc_model(ex1_params)
        for name in ("A1", "A2", "B1", "B2", "C_row", "D_row", "E1", "E2", "E"):
            assert np.array_equal(getattr(a, name), getattr(b, name))

    def test_matrices_are_frozen(self, ex1_model):
        with pytest.raises(ValueError):
            ex1_model.A1[0, 0] = 0.0


class TestType3Realization:
    def test_transfer_function_matches_probe_frequencies(self, ex2_params):
        comp = ex2_params.scheme
        real = realize_type3(comp)
        assert real.A.shape == (3, 3)
        freqs = np.logspace(np.log10(comp.z1 / 100), np.log10(100 * comp.p2), 20)
        for w in freqs:
            s = 1j * w
            got = real.transfer(s)
            want = direct_type3_tf(comp, s)
            assert abs(got - want) <= 1e-9 * abs(want)

    def test_gain_at_1000_rad(self, ex2_params):
        comp = ex2_params.scheme
        real = realize_type3(comp)
        s = 1j * 1000.0
        assert abs(real.transfer(s)) == pytest.approx(
            abs(direct_type3_tf(comp, s)), rel=1e-9)

    def test_integrator_dc_gain_diverges(self, ex2_params):
        real = realize_type3(ex2_params.scheme)
        g1 = abs(real.transfer(1j * 1e-3))
        g2 = abs(real.transfer(1j * 1e-6))
        assert g2 > 100 * g1

    def test_gain_linearity(self, ex2_params):
        comp = ex2_params.scheme
        doubled = VmcType3(K_c=2 * comp.K_c, z1=comp.z1, z2=comp.z2,
                           p1=comp.p1, p2=comp.p2)
        r1, r2 = realize_type3(comp), realize_type3(doubled)
        for w in (10.0, 1e3, 1e5):
            assert r2.transfer(1j * w) == pytest.approx(2 * r1.transfer(1j * w),
                                                        rel=1e-9)

    def test_repeated_pole(self):
        comp = VmcType3(K_c=10.0, z1=500.0, z2=700.0, p1=2e4, p2=2e4)
        real = realize_type3(comp)
        for w in (5.0, 300.0, 2e4, 1e6):
            s = 1j * w
            assert real.transfer(s) == pytest.approx(direct_type3_tf(comp, s),
                                                     rel=1e-9)


class TestType3Model:
    def test_dimension_and_feedback_rows(self, ex2_model):
        m = ex2_model
        assert m.N == 5
        assert np.array_equal(m.D_row, [0.0, 1.0])
        assert np.array_equal(m.C_row[:2], [0.0, 0.0])
        assert m.state_labels[:2] == ("i_L", "v_C")

    def test_degenerate_zero_compensator_reduces_to_reference(self, ex2_params):
        # zeroing the compensator output weights leaves y = v_r
        m = build_type3_model(ex2_params)
        x = np.array([1.0, 5.0, 0.0, 0.0, 0.0])
        assert m.output_y(x, 12.5) == pytest.approx(12.5)

    def test_dc_saturation_output(self, ex2_params):
        # at (i_L, v_C) = (v_s/r, 0) the integrator keeps charging, so any
        # positive reference eventually drives y above the ramp crest
        m = build_type3_model(ex2_params)
        x = np.zeros(5)
        x[0] = ex2_params.v_s / ex2_params.r
        x[2] = 3.0 * ex2_params.V_h
        assert m.output_y(x, 30.0) > ex2_params.V_h

    def test_rejects_wrong_scheme(self, ex1_params):
        with pytest.raises(ValueError):
            build_type3_model(ex1_params)


class TestCmcModel:
    def test_closed_loop_rows(self, ex3_model):
        assert np.array_equal(ex3_model.C_row, [-1.0, -2.0])
        assert np.array_equal(ex3_model.D_row, [0.0, 2.0])

    def test_open_loop_rows(self, ex3_params):
        m = build_cmc_model(ex3_params.replace(scheme=CmcOpenLoop()))
        assert np.array_equal(m.C_row, [-1.0, 0.0])
        assert np.array_equal(m.D_row, [0.0, 1.0])

    def test_closed_loop_output_is_current_error(self, ex3_model):
        x = np.array([4.0, 1.5])
        # y = k_p (v_r - v_C) - i_L
        assert ex3_model.output_y(x, 10.0) == pytest.approx(2 * (10 - 1.5) - 4.0)

    def test_rejects_vmc_scheme(self, ex1_params):
        with pytest.raises(ValueError):
            build_cmc_model(ex1_params)


class TestRampSpec:
    def test_sawtooth_shape(self, ex1_model):
        ramp = ex1_model.ramp
        T = ex1_model.T
        assert ramp.value(0.0) == 0.0
        assert ramp.value(T * (1 - 1e-12)) == pytest.approx(ramp.V_h, rel=1e-9)
        ts = np.linspace(0.0, T * (1 - 1e-12), 100)
        vals = [ramp.value(t) for t in ts]
        assert np.all(np.diff(vals) >= 0)
        # restarts at the clock edge
        assert ramp.value(T) == 0.0


class TestParams:
    def test_invariant_violations(self):
        with pytest.raises(ValueError):
            ConverterParams(v_s=-1, L=1e-6, C_f=1e-4, R=2, r=0.1, R_c=0,
                            V_h=1, f_s=600e3, scheme=Pvmc(k_p=2))
        with pytest.raises(ValueError):
            ConverterParams(v_s=3, L=1e-6, C_f=1e-4, R=2, r=-0.1, R_c=0,
                            V_h=1, f_s=600e3, scheme=Pvmc(k_p=2))
        with pytest.raises(ValueError):
            Pvmc(k_p=0.0)

    def test_derived_quantities(self, ex1_params):
        assert ex1_params.eta == pytest.approx(0.05)
        assert ex1_params.T == pytest.approx(1 / 600e3)
        assert ex1_params.kappa == pytest.approx(2.0)
