import math

import numpy as np
import pytest

from divlat.algebra import AlgebraicScalar, rational
from divlat.channel import FadingRealization, apply_channel, sample_fading, trial_rng
from divlat.construction import build_fd_bp
from divlat.iterative import (
    GaussianPeak,
    IterConfig,
    IterativeDecoder,
    QuantizedPdf,
    check_message,
    init_variable_pdfs,
    peak_amplitude_oracle,
    variable_update,
)

INV2 = AlgebraicScalar.inv_sqrt(2)


def gaussian_pdf(mean, var, start, step, length):
    g = start + step * np.arange(length)
    vals = np.exp(-0.5 * (g - mean) ** 2 / var)
    return QuantizedPdf(grid_start=start, resolution=step, values=vals).normalize()


# ---------------------------------------------------------------------------
# peak oracle
# ---------------------------------------------------------------------------


def test_peak_oracle_four_identical_standard_normals():
    p = GaussianPeak(1.0, 0.0, 1.0)
    out = peak_amplitude_oracle([p, p, p, p])
    assert out.mean == pytest.approx(0.0, abs=0)
    assert out.variance == pytest.approx(0.25)


def test_peak_oracle_matches_known_two_gaussian_formula():
    a = GaussianPeak(1.0, 0.3, 0.5)
    b = GaussianPeak(1.0, -0.4, 1.5)
    out = peak_amplitude_oracle([a, b])
    v = 1 / (1 / 0.5 + 1 / 1.5)
    assert out.variance == pytest.approx(v)
    assert out.mean == pytest.approx(v * (0.3 / 0.5 - 0.4 / 1.5))
    want_amp = math.exp(-0.5 * (0.3 + 0.4) ** 2 / 2.0) / math.sqrt(2 * math.pi * 2.0)
    assert out.amplitude == pytest.approx(want_amp)


def test_peak_oracle_maximized_when_means_coincide():
    rng = trial_rng(31)
    for _ in range(40):
        variances = rng.uniform(0.1, 2.0, 4)
        periods = rng.uniform(0.5, 3.0, 3)
        base = rng.normal()
        best = None
        for z1 in range(-2, 3):
            for z2 in range(-2, 3):
                for z3 in range(-2, 3):
                    peaks = [GaussianPeak(1.0, base, variances[0])]
                    for i, z in enumerate((z1, z2, z3)):
                        peaks.append(GaussianPeak(1.0, base + z * periods[i],
                                                  variances[i + 1]))
                    amp = peak_amplitude_oracle(peaks).amplitude
                    key = (z1, z2, z3)
                    if best is None or amp > best[0]:
                        best = (amp, key)
        assert best[1] == (0, 0, 0)


def test_grid_product_matches_oracle_on_random_fixtures():
    rng = trial_rng(32)
    step = 1e-3
    length = 1 << 13
    start = -0.5 * step * length
    checked = 0
    while checked < 120:
        means = rng.uniform(-0.4, 0.4, 4)
        variances = rng.uniform(0.05, 0.5, 4) ** 2
        peaks = [GaussianPeak(1.0, m, v) for m, v in zip(means, variances)]
        want = peak_amplitude_oracle(peaks)
        grid = start + step * np.arange(length)
        prod = np.ones(length)
        for m, v in zip(means, variances):
            prod *= np.exp(-0.5 * (grid - m) ** 2 / v) / math.sqrt(2 * math.pi * v)
        peak_idx = int(prod.argmax())
        num_mean = grid[peak_idx]
        num_amp = prod[peak_idx]
        analytic_peak = want.amplitude / math.sqrt(2 * math.pi * want.variance)
        assert abs(num_mean - want.mean) <= step
        assert num_amp / analytic_peak == pytest.approx(1.0, abs=0.01)
        checked += 1


# ---------------------------------------------------------------------------
# check_message: convolution, stretching, periodic extension
# ---------------------------------------------------------------------------


CFG_REF = IterConfig(pdf_length=1 << 12, fft_size=1 << 12)


def test_check_message_mean_variance_additivity():
    # unit coefficients and a period far wider than the spread: the output
    # is the plain convolution, with mean m1+m2 and variance v1+v2
    step = 4e-3
    length = 1 << 12
    start = -0.5 * step * length
    a = gaussian_pdf(0.35, 0.04, start, step, length)
    b = gaussian_pdf(-0.15, 0.09, start, step, length)
    out = check_message([a, b], [-1.0, -1.0], out_coeff=1.0, theta=1 / 64,
                        cfg=CFG_REF, out_grid=a)
    # theta*out_coeff = 1/64 means period 64, far beyond the grid
    assert out.mean() == pytest.approx(0.20, abs=step / 2)
    assert out.variance() == pytest.approx(0.13, rel=0.02)
    assert out.integral() == pytest.approx(1.0, abs=1e-6)


def test_check_message_delta_sum():
    step = 2e-3
    length = 1 << 12
    start = -0.5 * step * length
    a = gaussian_pdf(0.8, (2 * step) ** 2, start, step, length)
    b = gaussian_pdf(-0.3, (2 * step) ** 2, start, step, length)
    out = check_message([a, b], [-1.0, -1.0], 1.0, 1 / 64, CFG_REF, out_grid=a)
    assert out.argmax_point() == pytest.approx(0.5, abs=2 * step)


def test_check_message_periodic_peaks():
    # one narrow input and a unit period: peaks at mean + k for integer k
    step = 2e-3
    length = 1 << 12
    start = -0.5 * step * length  # grid spans +-4.1
    a = gaussian_pdf(0.3, 0.0004, start, step, length)
    out = check_message([a], [-1.0], out_coeff=1.0, theta=1.0, cfg=CFG_REF,
                        out_grid=a)
    grid = out.grid()
    for k in (-3, -2, -1, 0, 1, 2, 3):
        idx = int(np.argmin(np.abs(grid - (0.3 + k))))
        window = out.values[idx - 3: idx + 4]
        assert window.max() >= 0.8 * out.values.max()


def test_check_message_stretch_by_coefficients():
    # s = 2x for the incoming leg: the sum pdf lives at c1*m1 + c2*m2
    step = 4e-3
    length = 1 << 12
    start = -0.5 * step * length
    a = gaussian_pdf(0.5, 0.01, start, step, length)
    b = gaussian_pdf(0.2, 0.01, start, step, length)
    out = check_message([a, b], [-2.0, -1.0], 1.0, 1 / 64, CFG_REF, out_grid=a)
    assert out.mean() == pytest.approx(1.2, abs=step)


def test_check_message_resolution_error():
    step = 0.3
    length = 1 << 12
    a = gaussian_pdf(0.0, 1.0, -0.5 * step * length, step, length)
    with pytest.raises(ValueError, match="resolution"):
        check_message([a], [1.0], out_coeff=2.0, theta=1.0, cfg=CFG_REF,
                      out_grid=a)
    with pytest.raises(ValueError, match="nonzero"):
        check_message([a], [0.0], out_coeff=1.0, theta=1.0, cfg=CFG_REF)


# ---------------------------------------------------------------------------
# variable_update / init_variable_pdfs
# ---------------------------------------------------------------------------


def test_variable_update_uniform_identity():
    step = 1e-2
    length = 1 << 10
    start = -0.5 * step * length
    a = gaussian_pdf(0.1, 0.04, start, step, length)
    flat = QuantizedPdf(start, step, np.ones(length)).normalize()
    out = variable_update(a, [flat])
    assert np.allclose(out.values, a.values, rtol=1e-9)


def test_variable_update_narrow_product_halves_variance():
    step = 5e-4
    length = 1 << 12
    start = -0.5 * step * length
    a = gaussian_pdf(0.0, 0.01, start, step, length)
    out = variable_update(a, [a])
    assert out.variance() == pytest.approx(0.005, rel=0.01)
    assert out.integral() == pytest.approx(1.0, abs=1e-6)


def test_variable_update_grid_mismatch():
    step = 1e-2
    a = gaussian_pdf(0.0, 0.1, -5.0, step, 1 << 10)
    b = gaussian_pdf(0.0, 0.1, -4.0, step, 1 << 10)
    with pytest.raises(ValueError, match="grid"):
        variable_update(a, [b])


def _small_icm():
    return build_fd_bp(8, 3, rational(1), INV2, seed=3)


def test_init_variable_pdfs_normalized_and_centered():
    icm = _small_icm()
    cfg = IterConfig(pdf_length=1 << 12, fft_size=256)
    rng = trial_rng(33)
    fading = FadingRealization(np.array([2.0, 1.0]), 2)
    y = rng.normal(size=8)
    pdfs = init_variable_pdfs(y, fading, 0.04, icm, cfg)
    for k, pdf in enumerate(pdfs):
        assert pdf.integral() == pytest.approx(1.0, abs=1e-6)
        alpha = 2.0 if k < 4 else 1.0
        assert pdf.mean() == pytest.approx(y[k] / alpha, abs=3 * pdf.resolution)
        assert math.sqrt(pdf.variance()) == pytest.approx(0.2 / alpha, rel=0.02)


def test_init_variable_pdfs_concentrates_as_noise_vanishes():
    icm = _small_icm()
    cfg = IterConfig(pdf_length=1 << 12, fft_size=256)
    y = np.linspace(-1, 1, 8)
    pdfs = init_variable_pdfs(y, FadingRealization.flat(2), 1e-12, icm, cfg)
    for k, pdf in enumerate(pdfs):
        top = pdf.values.max() * pdf.resolution
        assert top >= 0.99  # effectively all mass in one cell
        assert pdf.argmax_point() == pytest.approx(y[k], abs=pdf.resolution)


def test_init_variable_pdfs_dead_block_uniform():
    icm = _small_icm()
    cfg = IterConfig(pdf_length=1 << 12, fft_size=256)
    pdfs = init_variable_pdfs(np.zeros(8), FadingRealization(np.array([0.0, 1.0]), 2),
                              0.01, icm, cfg)
    flat = pdfs[0].values
    assert np.allclose(flat, flat[0])


# ---------------------------------------------------------------------------
# full decoding
# ---------------------------------------------------------------------------


def test_decode_noiseless_recovers_point_in_one_iteration():
    icm = _small_icm()
    cfg = IterConfig(pdf_length=1 << 14, fft_size=1024, max_iterations=10)
    dec = IterativeDecoder(icm, cfg)
    rng = trial_rng(34)
    z = rng.integers(-2, 3, size=8)
    x = dec.G @ z.astype(float)
    fading = FadingRealization(np.array([1.3, 0.8]), 2)
    y = apply_channel(x, fading, 0.0, rng)
    out = dec.decode(y, fading, 1e-14)
    assert np.array_equal(out.z_hat, z)
    assert out.converged


def test_decode_deterministic():
    icm = _small_icm()
    cfg = IterConfig(pdf_length=1 << 14, fft_size=512, max_iterations=20)
    dec = IterativeDecoder(icm, cfg)
    detG = abs(np.linalg.det(dec.G))
    sigma2 = detG ** (2 / 8) / 10 ** 1.6
    rng = trial_rng(35)
    fading = sample_fading(2, rng)
    y = apply_channel(np.zeros(8), fading, sigma2, rng)
    a = dec.decode(y, fading, sigma2)
    b = dec.decode(y, fading, sigma2)
    assert np.array_equal(a.z_hat, b.z_hat)
    assert np.array_equal(a.x_hat, b.x_hat)
    assert a.iterations == b.iterations


def test_decode_reference_mode_agrees_with_reduced():
    # fft_size = pdf_length is the exact slow path; the production tiling
    # must reach the same decisions on ordinary channels
    icm = _small_icm()
    fast = IterativeDecoder(icm, IterConfig(pdf_length=1 << 13, fft_size=512,
                                            max_iterations=30))
    slow = IterativeDecoder(icm, IterConfig(pdf_length=1 << 13, fft_size=1 << 13,
                                            max_iterations=30))
    detG = abs(np.linalg.det(fast.G))
    sigma2 = detG ** (2 / 8) / 10 ** 2.0
    agree = 0
    for t in range(25):
        rng = trial_rng(36, t)
        fading = sample_fading(2, rng)
        y = apply_channel(np.zeros(8), fading, sigma2, rng)
        za = fast.decode(y, fading, sigma2).z_hat
        zb = slow.decode(y, fading, sigma2).z_hat
        agree += int(np.array_equal(za, zb))
    assert agree >= 23


def test_decode_single_peak_mode_runs():
    icm = _small_icm()
    cfg = IterConfig(pdf_length=1 << 13, fft_size=512, max_iterations=20,
                     mode="single-peak")
    dec = IterativeDecoder(icm, cfg)
    detG = abs(np.linalg.det(dec.G))
    sigma2 = detG ** (2 / 8) / 10 ** 2.2
    ok = 0
    for t in range(10):
        rng = trial_rng(37, t)
        fading = sample_fading(2, rng)
        y = apply_channel(np.zeros(8), fading, sigma2, rng)
        out = dec.decode(y, fading, sigma2)
        ok += int((out.z_hat == 0).all())
    assert ok >= 7


def test_decode_error_rate_invariant_to_transmitted_point():
    icm = _small_icm()
    cfg = IterConfig(pdf_length=1 << 13, fft_size=512, max_iterations=25)
    dec = IterativeDecoder(icm, cfg)
    detG = abs(np.linalg.det(dec.G))
    sigma2 = detG ** (2 / 8) / 10 ** 1.55
    errs = {"zero": 0, "random": 0}
    trials = 400
    for t in range(trials):
        for kind in ("zero", "random"):
            rng = trial_rng(38, t, 0 if kind == "zero" else 1)
            z = (np.zeros(8, dtype=np.int64) if kind == "zero"
                 else rng.integers(-2, 3, size=8))
            fading = sample_fading(2, rng)
            y = apply_channel(dec.G @ z.astype(float), fading, sigma2, rng)
            out = dec.decode(y, fading, sigma2)
            errs[kind] += int(not np.array_equal(out.z_hat, z))
    p0, p1 = errs["zero"] / trials, errs["random"] / trials
    spread = 3 * math.sqrt((p0 * (1 - p0) + p1 * (1 - p1)) / trials + 1e-9)
    assert abs(p0 - p1) <= max(spread, 0.03)


def test_decoder_argmax_matches_peak_oracle_on_single_check_fixture():
    # one check with three unit-period messages plus the channel pdf: the
    # winning integer triple from the closed-form amplitude must match the
    # grid argmax of the quantized product
    rng = trial_rng(39)
    step = 1e-3
    length = 1 << 13
    start = -0.5 * step * length
    grid = start + step * np.arange(length)
    for _ in range(20):
        v0 = rng.uniform(0.05, 0.2) ** 2
        x_true = rng.uniform(-0.3, 0.3)
        chan = np.exp(-0.5 * (grid - x_true) ** 2 / v0)
        periods = rng.uniform(0.8, 2.5, 3)
        offsets = rng.uniform(-0.05, 0.05, 3)
        variances = rng.uniform(0.05, 0.15, 3) ** 2
        prod = chan.copy()
        for T, off, v in zip(periods, offsets, variances):
            msg = np.zeros_like(grid)
            m0 = x_true + off
            for k in range(-6, 7):
                msg += np.exp(-0.5 * (grid - (m0 + k * T)) ** 2 / v)
            prod *= msg
        num_x = grid[int(prod.argmax())]
        best = None
        for z1 in range(-3, 4):
            for z2 in range(-3, 4):
                for z3 in range(-3, 4):
                    peaks = [GaussianPeak(1.0, x_true, v0)]
                    for T, off, v, z in zip(periods, offsets, variances,
                                            (z1, z2, z3)):
                        peaks.append(GaussianPeak(1.0, x_true + off + z * T, v))
                    g = peak_amplitude_oracle(peaks)
                    if best is None or g.amplitude > best[0]:
                        best = (g.amplitude, g.mean)
        assert abs(num_x - best[1]) <= 2 * step
