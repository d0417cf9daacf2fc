"""Packet construction, widths, and momentum spectra.

Width oracles come from closed-form quadrature of the envelopes: the
flat-top amplitude ramps as cos^2, so the density ramps as cos^4 (mean 3/8
over the ramp) and its square as cos^8 (mean 35/128), giving an
equivalent-rectangle width of w(1 - f/4)^2 / (1 - 29f/64) for taper
fraction f and nominal width w; a Gaussian density of scale sigma gives
sigma*sqrt(2*pi).
"""
import math

import numpy as np
import pytest

from stepscatter import (
    FlatTop,
    Gaussian,
    GridSpec,
    PacketSpec,
    WaveState,
    build_packet,
    effective_width,
    momentum_spectrum,
    require_narrowband,
)

K0 = 5.0
LAM = 2.0 * math.pi / K0


def flat_top_state(width_lams, taper=0.1, n=2**15, k0=K0):
    w = width_lams * LAM
    half = 0.5 * (1.0 + taper) * w
    grid = GridSpec(-2.0 * half - 5.0, 2.0 * half + 5.0, n)
    spec = PacketSpec(shape=FlatTop(taper_fraction=taper), center=0.0, width=w, k0=k0)
    return build_packet(spec, grid)


class TestGridSpec:
    def test_spacing_and_axis(self):
        grid = GridSpec(-2.0, 2.0, 16)
        assert grid.dx == pytest.approx(0.25)
        x = grid.x()
        assert x[0] == -2.0
        assert x[-1] == pytest.approx(2.0 - grid.dx)  # right endpoint excluded

    def test_wavenumbers_match_fft_convention(self):
        grid = GridSpec(0.0, 10.0, 32)
        k = grid.wavenumbers()
        assert k[0] == 0.0
        assert k[1] == pytest.approx(2.0 * math.pi / 10.0)

    def test_rejects_inverted_bounds(self):
        with pytest.raises(ValueError):
            GridSpec(1.0, -1.0, 64)


class TestBuildPacket:
    def test_normalised(self):
        state = flat_top_state(40.0)
        assert state.norm() == pytest.approx(1.0, abs=1e-12)

    def test_support_must_fit_inside_grid(self):
        grid = GridSpec(-10.0, 10.0, 256)
        spec = PacketSpec(shape=FlatTop(0.1), center=0.0, width=19.0, k0=K0)
        with pytest.raises(ValueError):
            build_packet(spec, grid)

    def test_support_touching_edge_rejected(self):
        # support_halfwidth = 0.55 * 10 = 5.5; center at 4.5 puts the right
        # edge exactly on x_max = 10, which is not *strictly* inside.
        grid = GridSpec(-10.0, 10.0, 1024)
        spec = PacketSpec(shape=FlatTop(0.1), center=4.5, width=10.0, k0=K0)
        with pytest.raises(ValueError):
            build_packet(spec, grid)

    def test_broadband_flat_top_warns(self):
        w = 10.0 * LAM  # below the 20-wavelength quasi-monochromatic floor
        grid = GridSpec(-30.0, 30.0, 2048)
        spec = PacketSpec(shape=FlatTop(0.1), center=0.0, width=w, k0=K0)
        with pytest.warns(UserWarning, match="wavelength"):
            build_packet(spec, grid)

    def test_wide_flat_top_does_not_warn(self):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("error")
            flat_top_state(25.0)

    def test_flat_region_is_flat(self):
        state = flat_top_state(40.0, taper=0.2)
        w = 40.0 * LAM
        x = state.grid.x()
        core = np.abs(x) < 0.5 * (1.0 - 0.2) * w - state.grid.dx
        mags = np.abs(state.psi[core])
        assert np.ptp(mags) < 1e-12 * np.max(mags)

    def test_taper_fraction_bounds(self):
        with pytest.raises(ValueError):
            FlatTop(taper_fraction=0.0)
        with pytest.raises(ValueError):
            FlatTop(taper_fraction=0.6)


class TestEffectiveWidth:
    def test_exact_for_rectangle(self):
        grid = GridSpec(0.0, 10.0, 1000)
        psi = np.zeros(1000, dtype=complex)
        psi[100:300] = 1.0  # 200 samples of dx = 0.01 -> width 2
        state = WaveState(grid=grid, psi=psi)
        assert effective_width(state) == pytest.approx(2.0, abs=1e-12)

    @pytest.mark.parametrize("taper", [0.1, 0.25, 0.4])
    def test_flat_top_quadrature_value(self, taper):
        w = 50.0 * LAM
        state = flat_top_state(50.0, taper=taper)
        expected = w * (1.0 - 0.25 * taper) ** 2 / (1.0 - 29.0 / 64.0 * taper)
        assert effective_width(state) == pytest.approx(expected, rel=1e-4)

    def test_gaussian_quadrature_value(self):
        sigma = 3.0
        grid = GridSpec(-40.0, 40.0, 2**13)
        spec = PacketSpec(shape=Gaussian(sigma=sigma), center=0.0, width=6.0 * sigma, k0=K0)
        state = build_packet(spec, grid)
        assert effective_width(state) == pytest.approx(sigma * math.sqrt(2.0 * math.pi), rel=1e-6)

    def test_independent_of_normalisation(self):
        state = flat_top_state(30.0)
        doubled = WaveState(grid=state.grid, psi=2.0 * state.psi)
        assert effective_width(doubled) == pytest.approx(effective_width(state), rel=1e-12)


class TestMomentumSpectrum:
    def test_plane_wave_occupies_single_bin(self):
        grid = GridSpec(0.0, 20.0, 256)
        k_lattice = 2.0 * math.pi * 7 / 20.0  # exactly on the FFT lattice
        psi = np.exp(1j * k_lattice * grid.x()) / math.sqrt(20.0)
        spectrum = momentum_spectrum(WaveState(grid=grid, psi=psi))
        peak = np.argmax(spectrum.density)
        assert spectrum.wavenumbers[peak] == pytest.approx(k_lattice, abs=1e-12)
        others = np.delete(spectrum.density, peak)
        assert np.max(others) < 1e-24 * spectrum.density[peak]

    def test_parseval_normalisation(self):
        state = flat_top_state(30.0)
        spectrum = momentum_spectrum(state)
        dk = spectrum.wavenumbers[1] - spectrum.wavenumbers[0]
        assert float(np.sum(spectrum.density)) * dk == pytest.approx(1.0, abs=1e-10)

    def test_centroid_sits_on_carrier(self):
        # The envelope is real and even, so the spectrum is symmetric about k0.
        spectrum = momentum_spectrum(flat_top_state(50.0, taper=0.4))
        assert spectrum.centroid == pytest.approx(K0, abs=1e-9)

    def test_gaussian_spectral_width(self):
        # density ~ exp(-u^2/sigma^2) transforms to sigma_k = 1/(sigma*sqrt(2)).
        sigma = 2.0
        grid = GridSpec(-60.0, 60.0, 2**13)
        spec = PacketSpec(shape=Gaussian(sigma=sigma), center=0.0, width=6.0 * sigma, k0=K0)
        spectrum = momentum_spectrum(build_packet(spec, grid))
        assert spectrum.sigma_k == pytest.approx(1.0 / (sigma * math.sqrt(2.0)), rel=1e-6)

    def test_spectral_width_scales_inversely_with_width(self):
        narrow = momentum_spectrum(flat_top_state(25.0, taper=0.4))
        wide = momentum_spectrum(flat_top_state(100.0, taper=0.4, n=2**16))
        assert narrow.sigma_k / wide.sigma_k == pytest.approx(4.0, rel=1e-3)

    def test_widths_sharpen_toward_monochromatic(self):
        sigmas = [
            momentum_spectrum(flat_top_state(20.0, taper=0.4)).sigma_k,
            momentum_spectrum(flat_top_state(100.0, taper=0.4, n=2**16)).sigma_k,
            momentum_spectrum(flat_top_state(500.0, taper=0.4, n=2**18)).sigma_k,
        ]
        assert sigmas[0] > sigmas[1] > sigmas[2]


class TestNarrowband:
    def test_report_thresholds(self):
        state = flat_top_state(40.0, taper=0.4)
        spectrum = momentum_spectrum(state)
        ratio = spectrum.sigma_k / K0
        assert require_narrowband(state, K0, max_ratio=1.01 * ratio).ok
        assert not require_narrowband(state, K0, max_ratio=0.99 * ratio).ok

    def test_report_carries_measured_values(self):
        state = flat_top_state(40.0, taper=0.4)
        report = require_narrowband(state, K0, max_ratio=0.1)
        assert report.centroid == pytest.approx(K0, abs=1e-6)
        assert report.k0 == K0

    def test_rejects_bad_carrier(self):
        state = flat_top_state(40.0)
        with pytest.raises(ValueError):
            require_narrowband(state, -1.0, max_ratio=0.1)


class TestSupportHalfwidth:
    def test_flat_top_includes_taper_overhang(self):
        spec = PacketSpec(shape=FlatTop(0.4), center=0.0, width=10.0, k0=K0)
        assert spec.support_halfwidth() == pytest.approx(7.0)

    def test_gaussian_uses_six_sigma(self):
        spec = PacketSpec(shape=Gaussian(sigma=1.5), center=0.0, width=9.0, k0=K0)
        assert spec.support_halfwidth() == pytest.approx(9.0)
