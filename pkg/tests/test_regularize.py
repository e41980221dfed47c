import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from slitwave.errors import ConfigurationError, ResolutionError, UsageError
from slitwave.fields import continuum_ft, l2_norm, make_grid, momentum_expectation
from slitwave.regularize import (RegFamily, SlitConfig, bump, barrier_droop,
                                 estimate_asymptotic_order, sample_barrier,
                                 sample_delta, sample_initial, sample_potential,
                                 sample_transmission, smoothstep)

import oracles

SCHEDULE = [2.0 ** -k for k in range(2, 9)]


@pytest.fixture
def fine_grid():
    return make_grid(512, 512, 16.0, 16.0, -8.0, -8.0)


class TestSlitConfig:
    def test_single_slit(self):
        s = SlitConfig.single_slit(1.0)
        assert s.intervals == ((-1.0, 1.0),)

    def test_double_slit(self):
        s = SlitConfig.double_slit(2.0, 0.5)
        assert s.intervals == ((-2.5, -1.5), (1.5, 2.5))

    def test_overlapping_rejected(self):
        with pytest.raises(ConfigurationError):
            SlitConfig(((-1.0, 0.5), (0.0, 1.0)))

    def test_empty_interval_rejected(self):
        with pytest.raises(ConfigurationError):
            SlitConfig(((1.0, 1.0),))

    def test_indicator_and_distance(self):
        s = SlitConfig.single_slit(1.0)
        ys = np.array([-2.0, -1.0, 0.0, 0.5, 1.0, 3.0])
        np.testing.assert_allclose(s.indicator(ys), [0, 0.5, 1, 1, 0.5, 0])
        np.testing.assert_allclose(s.distance_to_boundary(ys), [1, 0, 1, 0.5, 0, 2])


class TestMollifier:
    def test_bump_mass_against_adaptive_quadrature(self):
        from slitwave.regularize import _BUMP_MASS
        oracle = integrate.quad(lambda s: float(oracles.bump(s)), -1, 1, limit=200)[0]
        assert _BUMP_MASS == pytest.approx(oracle, rel=1e-12)

    def test_smoothstep_endpoints_and_midpoint(self):
        s = smoothstep(np.array([-1.5, -1.0, 0.0, 1.0, 2.0]))
        np.testing.assert_allclose(s, [0.0, 0.0, 0.5, 1.0, 1.0], atol=1e-14)

    def test_smoothstep_against_quadrature(self):
        for x in [-0.8, -0.3, 0.2, 0.7]:
            oracle = (integrate.quad(lambda s: float(oracles.bump(s)), -1, x, limit=200)[0]
                      / oracles.bump_mass())
            assert smoothstep(np.array(x)) == pytest.approx(oracle, abs=1e-12)


class TestRegFamily:
    def test_packet_leak_rejected(self):
        with pytest.raises(ConfigurationError):
            RegFamily(packet_center=-1.5, phi_width=1.0)

    def test_alpha_range_enforced(self):
        with pytest.raises(ConfigurationError):
            RegFamily(barrier_law="power", alpha=0.7)

    def test_power_family_predictor_decreases(self):
        fam = RegFamily(barrier_law="power", alpha=0.4)
        assert fam.hypothesis_satisfied(SCHEDULE)
        preds = [fam.decay_predictor(e) for e in SCHEDULE]
        assert all(b < a for a, b in zip(preds, preds[1:]))

    def test_box_family_violates_hypothesis(self):
        fam = RegFamily(kind="box", barrier_law="inverse")
        assert not fam.hypothesis_satisfied(SCHEDULE)

    def test_schedule_validation(self):
        fam = RegFamily()
        fam.validate_schedule(SCHEDULE)
        with pytest.raises(ConfigurationError):
            fam.validate_schedule([0.1, 0.2])
        with pytest.raises(ConfigurationError):
            fam.validate_schedule([0.1, -0.2])


class TestSampleDelta:
    def test_box_values(self):
        # dx = 0.025 divides c_eps = 0.1, so the sharp profile lands exactly:
        # interior value 1/(2 eps) = 5, half-weight edges, zero outside
        g = make_grid(512, 64, 12.8, 12.8, -6.4, -6.4)
        fam = RegFamily(kind="box")
        vals = sample_delta(fam, 0.1, g)
        interior = np.abs(g.xs) < 0.1 - 1e-12
        edges = np.isclose(np.abs(g.xs), 0.1)
        outside = np.abs(g.xs) > 0.1 + 1e-12
        np.testing.assert_allclose(vals[interior], 5.0, rtol=1e-12)
        np.testing.assert_allclose(vals[edges], 2.5, rtol=1e-12)
        np.testing.assert_allclose(vals[outside & ~edges], 0.0)

    @pytest.mark.parametrize("kind", ["box", "mollified"])
    def test_unit_discrete_mass(self, fine_grid, kind):
        fam = RegFamily(kind=kind)
        for eps in SCHEDULE[:3]:
            vals = sample_delta(fam, eps, fine_grid)
            assert np.sum(vals) * fine_grid.dx == pytest.approx(1.0, abs=1e-10)
            assert np.all(vals >= 0)

    def test_mollified_peak_against_quadrature(self):
        # scaled bump psi(x/c)/(c K); peak value psi(0)/(c K) with K from
        # adaptive quadrature, up to the discrete-mass renormalization factor
        g = make_grid(4096, 64, 16.0, 16.0, -8.0, -8.0)
        fam = RegFamily(kind="mollified")
        eps = 0.05
        c = fam.c_eps(eps)
        vals = sample_delta(fam, eps, g)
        mass_k = oracles.bump_mass()
        ideal_peak = np.exp(-1.0) / (c * mass_k)
        raw = oracles.bump(g.xs / c) / (c * mass_k)
        renorm = np.sum(raw) * g.dx
        j0 = g.nearest_x_index(0.0)
        assert vals[j0] == pytest.approx(ideal_peak / renorm, rel=1e-12)
        assert abs(renorm - 1.0) < 2e-3

    def test_support_constraint(self, fine_grid):
        fam = RegFamily(kind="mollified")
        vals = sample_delta(fam, 0.2, fine_grid)
        assert np.all(vals[np.abs(fine_grid.xs) > 0.2 + 1e-12] == 0.0)

    def test_under_resolved_names_minimal_grid(self):
        g = make_grid(64, 64, 16.0, 16.0, -8.0, -8.0)
        fam = RegFamily(kind="box")
        with pytest.raises(ResolutionError, match="nx"):
            sample_delta(fam, 0.1, g)

    def test_nonpositive_eps_rejected(self, fine_grid):
        with pytest.raises(UsageError):
            sample_delta(RegFamily(), 0.0, fine_grid)


class TestSampleBarrier:
    def test_box_values(self, fine_grid):
        fam = RegFamily(kind="box")
        slits = SlitConfig.single_slit(1.0)
        vals = sample_barrier(fam, slits, 0.25, fine_grid)
        k_in = fine_grid.nearest_y_index(0.0)
        k_out = fine_grid.nearest_y_index(2.0)
        assert vals[k_in] == 0.0
        assert vals[k_out] == pytest.approx(4.0, rel=1e-12)

    @pytest.mark.parametrize("kind", ["box", "mollified"])
    def test_slits_transmit(self, fine_grid, kind):
        fam = RegFamily(kind=kind)
        slits = SlitConfig.double_slit(2.0, 0.6)
        for eps in [0.25, 0.125]:
            vals = sample_barrier(fam, slits, eps, fine_grid)
            height = fam.barrier_height(eps)
            deep = ((slits.indicator(fine_grid.ys) == 1.0)
                    & (slits.distance_to_boundary(fine_grid.ys)
                       > 2 * fam.transition_width(eps, slits)))
            assert np.max(vals[deep]) <= height * 1e-6
            assert np.max(vals) == pytest.approx(height, abs=1e-10 * height)
            assert np.all(vals >= 0)

    def test_mollified_transition_midpoint(self, fine_grid):
        fam = RegFamily(kind="mollified")
        slits = SlitConfig.single_slit(1.0)
        eps = 0.25
        vals = sample_barrier(fam, slits, eps, fine_grid)
        height = fam.barrier_height(eps)
        k_edge = fine_grid.nearest_y_index(1.0)
        assert vals[k_edge] == pytest.approx(height / 2, abs=0.01 * height)

    def test_compact_support_plateau(self):
        g = make_grid(64, 2048, 16.0, 64.0, -8.0, -32.0)
        fam = RegFamily(kind="box")
        slits = SlitConfig.single_slit(1.0)
        vals = sample_barrier(fam, slits, 0.1, g)
        assert np.all(vals[np.abs(g.ys) > 10.0 + 1e-9] == 0.0)

    def test_under_resolved_slit_rejected(self):
        g = make_grid(64, 64, 16.0, 16.0, -8.0, -8.0)
        with pytest.raises(ResolutionError):
            sample_barrier(RegFamily(kind="box"), SlitConfig.single_slit(0.3), 0.25, g)

    def test_droop_is_small_inside_plateau(self, fine_grid):
        fam = RegFamily(kind="mollified")
        slits = SlitConfig.single_slit(1.0)
        droop = barrier_droop(fam, slits, 0.25, fine_grid)
        assert droop == pytest.approx(0.0, abs=1e-9 * fam.barrier_height(0.25))


class TestSampleTransmission:
    def test_pointwise_identity_with_barrier(self, fine_grid):
        fam = RegFamily(kind="mollified")
        slits = SlitConfig.single_slit(1.0)
        eps = 0.125
        h = sample_barrier(fam, slits, eps, fine_grid)
        b = sample_transmission(fam, slits, eps, fine_grid)
        np.testing.assert_array_equal(b + h / fam.barrier_height(eps), np.ones_like(b))
        assert np.all(b >= 0.0) and np.all(b <= 1.0)

    def test_deep_inside_slit_close_to_one(self, fine_grid):
        fam = RegFamily(kind="box")
        slits = SlitConfig.single_slit(1.0)
        b = sample_transmission(fam, slits, 0.25, fine_grid)
        k = fine_grid.nearest_y_index(0.0)
        assert b[k] == pytest.approx(1.0, abs=1e-6)

    def test_distance_to_indicator_decreases_on_schedule(self):
        # sup |b_eps - 1_S| over samples farther than 0.1 from the slit
        # edges, within a box the plateau always covers
        g = make_grid(16, 1024, 4.0, 14.0, -2.0, -7.0)
        fam = RegFamily(kind="mollified")
        slits = SlitConfig.single_slit(2.0)
        dists = []
        for eps in SCHEDULE[1:]:
            b = sample_transmission(fam, slits, eps, g)
            ind = slits.indicator(g.ys)
            mask = slits.distance_to_boundary(g.ys) > 0.1
            dists.append(np.max(np.abs(b - ind)[mask]))
        assert all(b <= a + 1e-15 for a, b in zip(dists, dists[1:]))
        assert dists[-1] < 0.01


class TestSamplePotential:
    def test_box_tensor_value(self, fine_grid):
        fam = RegFamily(kind="box")
        slits = SlitConfig.single_slit(1.0)
        v = sample_potential(fam, slits, 0.25, fine_grid)
        j0 = fine_grid.nearest_x_index(0.0)
        k2 = fine_grid.nearest_y_index(2.0)
        assert v.values[j0, k2].real == pytest.approx(8.0, rel=1e-12)
        assert v.values[j0, k2].imag == 0.0

    def test_vanishes_inside_slits(self, fine_grid):
        fam = RegFamily(kind="box")
        slits = SlitConfig.single_slit(1.0)
        v = sample_potential(fam, slits, 0.25, fine_grid)
        inside = np.abs(fine_grid.ys) < 1.0 - 2 * fine_grid.dy
        assert np.max(np.abs(v.values[:, inside])) == 0.0

    @pytest.mark.parametrize("kind", ["box", "mollified"])
    def test_nonnegative_and_max_factorizes(self, fine_grid, kind):
        fam = RegFamily(kind=kind)
        slits = SlitConfig.double_slit(2.0, 0.6)
        eps = 0.125
        v = sample_potential(fam, slits, eps, fine_grid)
        assert np.all(v.values.real >= 0.0)
        dmax = np.max(sample_delta(fam, eps, fine_grid))
        hmax = np.max(sample_barrier(fam, slits, eps, fine_grid))
        assert np.max(v.values.real) == pytest.approx(dmax * hmax, rel=1e-12)


class TestSampleInitial:
    def test_unit_norm_and_momentum(self):
        g = make_grid(256, 256, 16.0, 16.0, -8.0, -8.0)
        fam = RegFamily(kind="mollified", packet_center=-4.0, phi_width=1.0,
                        rho_width=2.0)
        f = sample_initial(fam, 0.25, 5.0, g)
        assert l2_norm(f) == pytest.approx(1.0, abs=1e-8)
        assert momentum_expectation(f, "x") == pytest.approx(5.0, abs=2e-3)
        assert momentum_expectation(f, "y") == pytest.approx(0.0, abs=1e-8)

    def test_box_kind_spectral_profile_is_sinc(self):
        # transversal factor sqrt(eps/2) chi(eps y): its transform is
        # proportional to sinc(eta/eps); compare profile ratios at the
        # momentum row, with the trapezoid tolerance (dy*eta)^2/12 * 2/eps
        g = make_grid(64, 512, 16.0, 32.0, -8.0, -16.0)
        eps = 0.5
        fam = RegFamily(kind="box", packet_center=-4.0, phi_width=1.0,
                        rho_width_law="inverse", rho_width=1.0)
        f = sample_initial(fam, eps, 0.0, g)
        ft = continuum_ft(f)
        j0 = 0  # p0 = 0 row
        base = ft[j0, 0]
        for k in [1, 2, 3, 5, 8]:
            eta = g.eta[k]
            expected = np.sinc(eta / eps / np.pi)  # sinc(z)=sin z / z
            got = (ft[j0, k] / base).real
            tol = (g.dy * eta) ** 2 / 12.0 * (2.0 / eps) / abs(base.real) * abs(ft[j0, 0].real) + 1e-9
            assert got == pytest.approx(expected, abs=max(tol, 2e-3))

    def test_leaking_packet_rejected(self):
        g = make_grid(64, 64, 8.0, 8.0, -4.0, -4.0)
        fam = RegFamily(packet_center=-3.9, phi_width=1.0)
        with pytest.raises(ConfigurationError):
            sample_initial(fam, 0.25, 1.0, g)

    def test_envelopes_nonnegative(self):
        g = make_grid(128, 128, 16.0, 16.0, -8.0, -8.0)
        fam = RegFamily(kind="mollified", packet_center=-4.0)
        f = sample_initial(fam, 0.25, 0.0, g)
        assert np.all(f.values.real >= -1e-15)
        assert np.max(np.abs(f.values.imag)) < 1e-15


class TestEstimateAsymptoticOrder:
    def test_exact_power_law(self):
        fit = estimate_asymptotic_order([(e, e ** -2) for e in SCHEDULE])
        assert fit.exponent == pytest.approx(2.0, abs=1e-12)
        assert fit.max_residual < 1e-12

    def test_constant_values(self):
        fit = estimate_asymptotic_order([(e, 3.7) for e in SCHEDULE])
        assert fit.exponent == pytest.approx(0.0, abs=1e-12)

    def test_box_potential_sup_norm_exponent(self):
        # max V_eps = 1/(2 eps^2) for the sharp family; measured from samples
        fam = RegFamily(kind="box")
        slits = SlitConfig.single_slit(1.0)
        g = make_grid(4096, 256, 16.0, 16.0, -8.0, -8.0)
        samples = []
        for eps in SCHEDULE[:5]:
            v = sample_potential(fam, slits, eps, g)
            samples.append((eps, float(np.max(v.values.real))))
        fit = estimate_asymptotic_order(samples)
        assert fit.exponent == pytest.approx(2.0, abs=0.05)

    @given(st.floats(-3.0, 3.0), st.floats(0.1, 10.0))
    @settings(max_examples=25, deadline=None)
    def test_planted_exponent_recovered(self, n, c):
        fit = estimate_asymptotic_order([(e, c * e ** -n) for e in SCHEDULE])
        assert abs(fit.exponent - n) < 0.05

    def test_too_few_samples_rejected(self):
        with pytest.raises(UsageError):
            estimate_asymptotic_order([(0.5, 1.0), (0.25, 2.0)])

    def test_nonpositive_values_rejected(self):
        with pytest.raises(UsageError):
            estimate_asymptotic_order([(e, 0.0) for e in SCHEDULE])
