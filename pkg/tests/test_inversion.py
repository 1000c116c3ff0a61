import numpy as np
import pytest

from lineport import (NumericalPreconditionError, ReducedState, Signal,
                      SourceSpec, ValidationError, assemble_rhs, bromwich_ifft,
                      integrate, invert_ifft, invert_partial_fractions,
                      normalize_max_abs, peak_envelope, residues, respond,
                      sources_from_initial, stiffness_matrix, transfer_matrix)
from lineport.spectral import ENTRY_NAMES, LcExampleParams, find_poles

from conftest import lc_model

TR = 2.0 * np.pi


class TestBromwichIfft:
    def test_langevin_kernel_pair(self):
        # 1/(s + 1/tau) <-> exp(-t/tau), the port memory kernel
        tau = 0.6
        sig = bromwich_ifft(np.array([1.0]), np.array([1.0, 1.0 / tau]),
                            t_max=5.0, n_samples=8192)
        exact = np.exp(-sig.t_grid / tau)
        assert np.abs(sig.samples - exact).max() <= 1e-6
        assert sig.meta["imag_residual"] <= 1e-8

    def test_contour_must_clear_poles(self):
        with pytest.raises(NumericalPreconditionError, match="contour crosses pole"):
            bromwich_ifft(np.array([1.0]), np.array([1.0, 2.0]), t_max=5.0,
                          sigma=-3.0)

    def test_sample_count_validation(self):
        num, den = np.array([1.0]), np.array([1.0, 1.0])
        with pytest.raises(ValidationError, match="power of two"):
            bromwich_ifft(num, den, 1.0, n_samples=3000)
        with pytest.raises(ValidationError, match="power of two"):
            bromwich_ifft(num, den, 1.0, n_samples=512)

    def test_improper_entry_refused(self):
        # at g=0, h22 = 1: a pure delta(t), not a function
        spec = transfer_matrix(0.0, 2.0)
        with pytest.raises(ValidationError, match="distributional"):
            invert_ifft(spec, "h22", t_max=10.0)


class TestAgainstPartialFractions:
    @pytest.mark.parametrize("g", [0.3, 0.8])
    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    def test_all_entries_agree(self, g, alpha):
        n = 16384 if alpha == 2.0 else 131072
        spec = transfer_matrix(g, alpha)
        for entry in ENTRY_NAMES:
            via_ifft = invert_ifft(spec, entry, t_max=10 * TR, n_samples=n)
            via_pf = invert_partial_fractions(spec, entry, via_ifft.t_grid)
            assert np.abs(via_ifft.samples - via_pf.samples).max() <= 1e-6

    def test_h21_normalized_agreement(self):
        spec = transfer_matrix(0.3, 2.0)
        via_ifft = invert_ifft(spec, "h21", t_max=10 * TR, n_samples=16384)
        via_pf = invert_partial_fractions(spec, "h21", via_ifft.t_grid)
        a = normalize_max_abs(via_pf)
        scale = a.normalization[0]
        assert np.abs(via_ifft.samples / scale - a.samples).max() <= 1e-6


class TestPartialFractions:
    def test_residue_consistency_identity(self):
        # sum_i R_i * den/(s - s_i) must reconstruct the numerator
        for entry in ENTRY_NAMES:
            spec = transfer_matrix(0.3, 2.0, omega_r=1.3)
            num_s, den_s = spec.entry_rational(entry)
            s, r, _ = residues(spec, entry)
            recon = np.zeros(len(den_s) - 1, dtype=complex)
            for si, ri in zip(s, r):
                quotient, _ = np.polydiv(den_s.astype(complex), np.array([1.0, -si]))
                recon += ri * quotient
            padded = np.zeros(len(recon))
            padded[len(recon) - len(num_s):] = num_s
            assert np.abs(recon.imag).max() <= 1e-12 * np.abs(recon.real).max()
            assert recon.real == pytest.approx(padded, rel=1e-9, abs=1e-12)

    def test_conjugate_pairing_keeps_signal_real(self):
        spec = transfer_matrix(0.3, 2.0)
        t = np.linspace(0.0, 10 * TR, 512)
        s, r, _ = residues(spec, "h11")
        complex_sum = np.exp(np.outer(t, s)) @ r
        assert np.abs(complex_sum.imag).max() <= 1e-14 * np.abs(complex_sum.real).max()

    def test_improper_entry_rejected(self):
        spec = transfer_matrix(0.0, 2.0)
        with pytest.raises(ValidationError, match="improper"):
            invert_partial_fractions(spec, "h22", np.linspace(0, 1, 64))


class TestDecayAndOscillation:
    @pytest.mark.parametrize("g", [0.3, 0.8])
    def test_tail_decay_matches_slowest_pole(self, g):
        spec = transfer_matrix(g, 2.0)
        ps = find_poles(spec.den)
        slowest = min(-s.real for s in ps.poles)
        t = np.linspace(0.0, 25 * TR, 20001)
        for entry in ENTRY_NAMES:
            sig = invert_partial_fractions(spec, entry, t)
            tail = t >= 12 * TR
            x_t, x_a = t[tail], np.abs(sig.samples[tail])
            signs = np.sign(sig.samples[tail])
            if np.count_nonzero(np.diff(signs)) >= 4:
                x_t, x_a = peak_envelope(x_t, sig.samples[tail])
            keep = x_a > 1e-300
            slope = np.polyfit(x_t[keep], np.log(x_a[keep]), 1)[0]
            assert -slope == pytest.approx(slowest, rel=0.02)

    def test_h11_spectral_peak_at_pair_frequency(self):
        spec = transfer_matrix(0.3, 2.0)
        ps = find_poles(spec.den)
        t_max = 80 * TR
        n = 2 ** 14
        t = np.linspace(0.0, t_max, n, endpoint=False)
        sig = invert_partial_fractions(spec, "h11", t)
        spectrum = np.abs(np.fft.rfft(sig.samples))
        freqs = np.fft.rfftfreq(n, d=t[1] - t[0])
        peak = freqs[np.argmax(spectrum)]
        assert abs(peak - ps.s2.imag / (2 * np.pi)) <= freqs[1]

    def test_h22_shape_invariance_under_omega_scaling(self):
        lam = 3.7
        t1 = np.linspace(0.0, 10 * TR, 4001)
        h_a = normalize_max_abs(invert_partial_fractions(
            transfer_matrix(0.3, 2.0, omega_r=1.0), "h22", t1))
        h_b = normalize_max_abs(invert_partial_fractions(
            transfer_matrix(0.3, 2.0, omega_r=lam), "h22", t1 / lam))
        assert np.abs(h_a.samples - h_b.samples).max() <= 1e-8


class TestRespond:
    def test_zero_sources_zero_response(self):
        spec = transfer_matrix(0.3, 2.0)
        t = np.linspace(0.0, 5 * TR, 512)
        phi1, v0 = respond(spec, SourceSpec(), SourceSpec(), t)
        assert not phi1.samples.any() and not v0.samples.any()

    def test_unit_delta_in_charge_slot(self):
        params = LcExampleParams.from_dimensionless(0.3, 2.0)
        spec = transfer_matrix(0.3, 2.0)
        t = np.linspace(0.0, 5 * TR, 512)
        phi1, _ = respond(spec, SourceSpec(delta_coef=1.0 / params.c_r),
                          SourceSpec(), t)
        h11 = invert_partial_fractions(spec, "h11", t)
        assert phi1.samples == pytest.approx(h11.samples / params.c_r, rel=1e-12)

    def test_backward_dirac_pulse_gives_column_two(self):
        # backward voltage wave = 0.5 delta(t) means f2 = delta(t)
        spec = transfer_matrix(0.3, 2.0)
        t = np.linspace(0.0, 5 * TR, 512)
        phi1, v0 = respond(spec, SourceSpec(), SourceSpec(delta_coef=1.0), t)
        h12 = invert_partial_fractions(spec, "h12", t)
        h22 = invert_partial_fractions(spec, "h22", t)
        assert phi1.samples == pytest.approx(h12.samples, rel=1e-12, abs=1e-15)
        assert v0.samples == pytest.approx(h22.samples, rel=1e-12, abs=1e-15)

    def test_delta_dot_inadmissible_against_h22(self):
        spec = transfer_matrix(0.3, 2.0)
        t = np.linspace(0.0, TR, 64)
        with pytest.raises(ValidationError, match="relative degree"):
            respond(spec, SourceSpec(), SourceSpec(ddelta_coef=1.0), t)

    def test_delta_dot_matches_flux_displacement(self):
        # f1 = delta_dot is the response to a pure initial flux displacement
        g, alpha = 0.3, 2.0
        model, topo, params = lc_model(g, alpha)
        spec = transfer_matrix(g, alpha)
        t = np.linspace(0.0, 10 * TR, 2001)
        f1, f2 = sources_from_initial(params, phi1=1.0)
        assert f1.ddelta_coef == 1.0 and f1.delta_coef == 0.0 and f2.delta_coef == 0.0
        phi1, v0 = respond(spec, f1, f2, t)
        traj = integrate(assemble_rhs(model, stiffness_matrix(topo)),
                         ReducedState(phi=[1.0], q=[0.0], q0=0.0), t)
        assert np.abs(phi1.samples - traj.phi[:, 0]).max() <= 1e-9
        assert np.abs(v0.samples - traj.v0).max() <= 1e-9 * np.abs(traj.v0).max()

    def test_regular_source_matches_time_domain(self):
        # smooth incoming wave: residue convolution vs direct integration
        g, alpha = 0.3, 2.0
        model, topo, params = lc_model(g, alpha)
        spec = transfer_matrix(g, alpha)
        t = np.linspace(0.0, 8 * TR, 8001)
        v_bwd = Signal.from_samples(t, 0.4 * np.exp(-((t - 2 * TR) / 2.0) ** 2))
        e0 = Signal.from_samples(t, 2.0 * v_bwd.samples)
        f1, f2 = sources_from_initial(params, v_bwd=v_bwd)
        phi1, v0 = respond(spec, f1, f2, t)
        traj = integrate(assemble_rhs(model, stiffness_matrix(topo), e0=e0),
                         ReducedState(phi=[0.0], q=[0.0], q0=0.0), t)
        scale = np.abs(traj.phi[:, 0]).max()
        assert np.abs(phi1.samples - traj.phi[:, 0]).max() <= 1e-3 * scale

    def test_sources_from_initial_column_structure(self):
        params = LcExampleParams.from_dimensionless(0.3, 2.0)
        g = params.g
        q1 = params.c_r / (1.0 - g)
        q0 = -g * params.c_r / (1.0 - g)
        f1, f2 = sources_from_initial(params, q1=q1, q0=q0)
        assert f1.delta_coef == pytest.approx(1.0, rel=1e-12)
        assert f2.delta_coef == pytest.approx(0.0, abs=1e-15)
        f1b, f2b = sources_from_initial(params, q0=1.0 / params.z_c)
        assert f1b.delta_coef == pytest.approx(0.0, abs=1e-15)
        assert f2b.delta_coef == pytest.approx(1.0, rel=1e-12)


class TestNormalize:
    def test_constant_signal(self):
        sig = Signal.from_samples(np.linspace(0, 1, 11), np.full(11, 3.0))
        out = normalize_max_abs(sig)
        assert np.all(out.samples == 1.0)
        assert out.normalization[0] == 3.0

    def test_damped_cosine_peaks_at_origin(self):
        t = np.linspace(0.0, 5.0, 2001)
        sig = Signal.from_samples(t, np.exp(-t) * np.cos(10 * t))
        out = normalize_max_abs(sig)
        assert out.normalization == (1.0, 0.0)

    def test_sign_preserved_and_extremum_hit(self):
        spec = transfer_matrix(0.3, 2.0)
        sig = invert_partial_fractions(spec, "h21", np.linspace(0.0, 10 * TR, 2001))
        out = normalize_max_abs(sig)
        assert out.samples.min() >= -1.0 and out.samples.max() <= 1.0
        assert np.abs(out.samples).max() == 1.0

    def test_zero_signal_rejected(self):
        sig = Signal.from_samples(np.linspace(0, 1, 8), np.zeros(8))
        with pytest.raises(ValidationError, match="all-zero"):
            normalize_max_abs(sig)
