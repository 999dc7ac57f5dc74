"""Quantized-pdf belief propagation for low-density lattices on block fading.

Messages are densities on per-variable grids of pdf_length samples.  A check
with row values h_1..h_d constrains sum h_k x_k to be an integer, so check
processing happens in the wrapped domain s = h x mod 1: incoming pdfs are
stretched by their coefficient and folded onto fft_size bins of one unit
period, circularly convolved via FFT, and the outgoing message is read back
through periodic linear interpolation.  Folding before convolving is exactly
the periodic extension of the full linear convolution, which is the
reduced-complexity fft_size < pdf_length scheme; fft_size = pdf_length is
the reference slow path.  Variable nodes multiply messages pointwise in the
log domain.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .algebra import invert_float
from .channel import FadingRealization
from .construction import IntegerCheckMatrix

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

__all__ = [
    "IterConfig",
    "QuantizedPdf",
    "GaussianPeak",
    "IterOutcome",
    "IterativeDecoder",
    "init_variable_pdfs",
    "check_message",
    "variable_update",
    "peak_amplitude_oracle",
    "decode_iterative",
]

LOG_FLOOR = 1e-300
MIN_SUPPORT = 9


@dataclass(frozen=True)
class IterConfig:
    pdf_length: int = 1 << 16
    fft_size: int = 1024
    max_iterations: int = 200
    L: int = 2
    grid_range_sigmas: float = 6.0
    slack_periods: float = 1.0
    stability: int = 3
    mode: str = "full"  # "full" | "single-peak"
    max_support: int = 1024  # active samples tracked around each center

    def __post_init__(self):
        for name in ("pdf_length", "fft_size"):
            v = getattr(self, name)
            if v < 2 or v & (v - 1):
                raise ValueError(f"{name} must be a power of two")
        if self.fft_size > self.pdf_length:
            raise ValueError("fft_size cannot exceed pdf_length")
        if self.mode not in ("full", "single-peak"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class QuantizedPdf:
    """Density sampled uniformly: values[t] at grid_start + t * resolution."""

    grid_start: float
    resolution: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        n = self.values.size
        if n < 2 or n & (n - 1):
            raise ValueError("pdf length must be a power of two")
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")

    def grid(self) -> np.ndarray:
        return self.grid_start + self.resolution * np.arange(self.values.size)

    def integral(self) -> float:
        return float(self.values.sum() * self.resolution)

    def normalize(self) -> "QuantizedPdf":
        s = self.integral()
        if s <= 0:
            raise ValueError("cannot normalize an all-zero pdf")
        self.values = self.values / s
        return self

    def mean(self) -> float:
        return float((self.grid() * self.values).sum() * self.resolution)

    def variance(self) -> float:
        m = self.mean()
        return float((((self.grid() - m) ** 2) * self.values).sum() * self.resolution)

    def argmax_point(self) -> float:
        return self.grid_start + self.resolution * int(self.values.argmax())


@dataclass(frozen=True)
class GaussianPeak:
    amplitude: float
    mean: float
    variance: float

    def __post_init__(self):
        if self.variance <= 0:
            raise ValueError("variance must be positive")
        if self.amplitude < 0:
            raise ValueError("amplitude must be nonnegative")


def peak_amplitude_oracle(peaks: list[GaussianPeak]) -> GaussianPeak:
    """Closed-form product of Gaussians: amplitude carries the pairwise
    squared-mean-difference penalty, so it is maximized exactly when all
    means coincide."""
    if not peaks:
        raise ValueError("need at least one peak")
    inv_v = sum(1.0 / p.variance for p in peaks)
    v_hat = 1.0 / inv_v
    m_hat = v_hat * sum(p.mean / p.variance for p in peaks)
    pair = 0.0
    for i in range(len(peaks)):
        for j in range(i + 1, len(peaks)):
            d = peaks[i].mean - peaks[j].mean
            pair += d * d / (peaks[i].variance * peaks[j].variance)
    kk = len(peaks)
    prod_v = math.prod(p.variance for p in peaks)
    amp = (math.prod(p.amplitude for p in peaks)
           * (2 * math.pi) ** (-(kk - 1) / 2.0)
           * math.sqrt(v_hat / prod_v)
           * math.exp(-0.5 * v_hat * pair))
    return GaussianPeak(amplitude=amp, mean=m_hat, variance=v_hat)


# ---------------------------------------------------------------------------
# Reference single-message operations
# ---------------------------------------------------------------------------


def _fold_to_period(pdf: QuantizedPdf, coeff: float, K: int) -> np.ndarray:
    """Mass of coeff * x (x ~ pdf) folded onto K bins of the unit period."""
    t = pdf.grid() * coeff
    mass = pdf.values * pdf.resolution
    b = (t - np.floor(t)) * K
    lo = b.astype(np.int64) % K
    frac = b - np.floor(b)
    out = np.zeros(K)
    np.add.at(out, lo, mass * (1.0 - frac))
    np.add.at(out, (lo + 1) % K, mass * frac)
    s = out.sum()
    if s <= 0:
        raise ValueError("folded pdf has no mass")
    return out / s


def _eval_periodic(folded: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Periodic linear interpolation of a unit-period bin array at points s."""
    K = folded.size
    b = (s - np.floor(s)) * K
    lo = b.astype(np.int64) % K
    frac = b - np.floor(b)
    return folded[lo] * (1.0 - frac) + folded[(lo + 1) % K] * frac


def init_variable_pdfs(y: np.ndarray, fading: FadingRealization, sigma2: float,
                       icm: IntegerCheckMatrix, cfg: IterConfig) -> list[QuantizedPdf]:
    """Channel pdfs: Gaussian at y_k/alpha with variance sigma^2/alpha^2,
    sampled on the per-variable grid; a dead block (alpha = 0) degrades to a
    uniform pdf carrying no channel information."""
    y = np.asarray(y, dtype=float)
    n = y.size
    gains = np.repeat(fading.alphas, n // fading.L)
    t_max = _max_period(icm)
    out = []
    for k in range(n):
        a = gains[k]
        if a > 0:
            c = y[k] / a
            sig = math.sqrt(sigma2) / a
            half = cfg.grid_range_sigmas * sig + cfg.slack_periods * t_max
            start = c - half
            step = 2 * half / cfg.pdf_length
            g = start + step * np.arange(cfg.pdf_length)
            vals = np.exp(-0.5 * ((g - c) / sig) ** 2) if sig > 0 else (
                (np.abs(g - c) < step).astype(float))
        else:
            half = 4.0 * t_max
            start = -half
            step = 2 * half / cfg.pdf_length
            vals = np.ones(cfg.pdf_length)
        pdf = QuantizedPdf(grid_start=start, resolution=step, values=vals)
        out.append(pdf.normalize())
    return out


def check_message(incoming: list[QuantizedPdf], coeffs: list[float],
                  out_coeff: float, theta: float, cfg: IterConfig,
                  out_grid: QuantizedPdf | None = None) -> QuantizedPdf:
    """Message a check sends along the edge with row value theta*out_coeff:
    stretch the incoming pdfs by their row values, convolve, extend
    periodically with period 1/|theta*out_coeff|, and sample on the target
    grid."""
    if any(c == 0 for c in coeffs) or out_coeff == 0 or theta == 0:
        raise ValueError("coefficients must be nonzero")
    h_out = theta * out_coeff
    ref = out_grid if out_grid is not None else incoming[0]
    if 1.0 / abs(h_out) < 2 * ref.resolution:
        raise ValueError("period below two grid cells: resolution insufficient")
    K = cfg.fft_size
    spec = np.ones(K // 2 + 1, dtype=complex)
    for pdf, c in zip(incoming, coeffs):
        spec = spec * np.fft.rfft(_fold_to_period(pdf, theta * c, K))
    conv = np.fft.irfft(np.conj(spec), K)
    conv = np.maximum(conv, 0.0)
    vals = _eval_periodic(conv, ref.grid() * h_out)
    out = QuantizedPdf(grid_start=ref.grid_start, resolution=ref.resolution,
                       values=vals)
    return out.normalize()


def variable_update(channel_pdf: QuantizedPdf, check_msgs: list[QuantizedPdf],
                    cfg: IterConfig | None = None) -> QuantizedPdf:
    """Pointwise product in the log domain, renormalized on the grid."""
    for m in check_msgs:
        if (m.grid_start, m.resolution, m.values.size) != (
                channel_pdf.grid_start, channel_pdf.resolution,
                channel_pdf.values.size):
            raise ValueError("messages must share the channel pdf grid")
    acc = np.log(np.maximum(channel_pdf.values, LOG_FLOOR))
    for m in check_msgs:
        acc = acc + np.log(np.maximum(m.values, LOG_FLOOR))
    acc -= acc.max()
    vals = np.exp(acc)
    if vals.sum() <= 0:
        raise ValueError("all-zero product: numerical underflow")
    out = QuantizedPdf(grid_start=channel_pdf.grid_start,
                       resolution=channel_pdf.resolution, values=vals)
    return out.normalize()


def _max_period(icm: IntegerCheckMatrix) -> float:
    h_min = min(abs(float(v)) for v in icm.H.entries.values())
    if h_min <= 0:
        raise ValueError("zero row value")
    return 1.0 / h_min


# ---------------------------------------------------------------------------
# Fast decoder
# ---------------------------------------------------------------------------


@njit(cache=True)
def _k_fold(q, e_h, len_e, grid0_e, gstep_e, folded):
    """Scatter per-edge masses q[e, :len] onto K wrapped bins of h*x mod 1."""
    E, K = folded.shape
    for e in range(E):
        for b in range(K):
            folded[e, b] = 0.0
        h = e_h[e]
        g0 = grid0_e[e]
        st = gstep_e[e]
        tot = 0.0
        for t in range(len_e[e]):
            v = q[e, t]
            s = h * (g0 + st * t)
            bpos = (s - math.floor(s)) * K
            lo = int(bpos)
            frac = bpos - lo
            if lo >= K:
                lo -= K
            hi = lo + 1
            if hi >= K:
                hi = 0
            folded[e, lo] += v * (1.0 - frac)
            folded[e, hi] += v * frac
            tot += v
        if tot > 0.0:
            inv = 1.0 / tot
            for b in range(K):
                folded[e, b] *= inv


@njit(cache=True)
def _k_eval(msgs, e_h, len_e, grid0_e, gstep_e, mvals):
    """Periodic linear interpolation of each edge message on its grid."""
    E, K = msgs.shape
    for e in range(E):
        h = e_h[e]
        g0 = grid0_e[e]
        st = gstep_e[e]
        for t in range(len_e[e]):
            s = h * (g0 + st * t)
            bpos = (s - math.floor(s)) * K
            lo = int(bpos)
            frac = bpos - lo
            if lo >= K:
                lo -= K
            hi = lo + 1
            if hi >= K:
                hi = 0
            mvals[e, t] = msgs[e, lo] * (1.0 - frac) + msgs[e, hi] * frac


@njit(cache=True)
def _k_single_peak(total_log, var_len):
    """Keep only the contiguous lobe around each variable's largest peak."""
    n = total_log.shape[0]
    for j in range(n):
        m = var_len[j]
        best = total_log[j, 0]
        arg = 0
        for t in range(1, m):
            if total_log[j, t] > best:
                best = total_log[j, t]
                arg = t
        t = arg
        while t > 0 and total_log[j, t - 1] <= total_log[j, t]:
            t -= 1
        lo = t
        t = arg
        while t < m - 1 and total_log[j, t + 1] <= total_log[j, t]:
            t += 1
        hi = t
        for t in range(lo):
            total_log[j, t] = -690.0
        for t in range(hi + 1, m):
            total_log[j, t] = -690.0


@dataclass
class IterOutcome:
    kind: str                 # always "decoded"; divergence is flagged
    z_hat: np.ndarray
    x_hat: np.ndarray
    iterations: int
    converged: bool
    elapsed_s: float


class IterativeDecoder:
    """Belief-propagation decoder bound to one lattice and configuration."""

    def __init__(self, icm: IntegerCheckMatrix, cfg: IterConfig):
        self.icm = icm
        self.cfg = cfg
        self._buffers: dict = {}
        self.Hf = icm.to_float()
        self.G = invert_float(self.Hf)
        n = icm.n
        e_check = []
        e_var = []
        e_h = []
        for i in range(n):
            for j in range(n):
                if self.Hf[i, j] != 0.0:
                    e_check.append(i)
                    e_var.append(j)
                    e_h.append(self.Hf[i, j])
        self.e_check = np.asarray(e_check, dtype=np.int64)
        self.e_var = np.asarray(e_var, dtype=np.int64)
        self.e_h = np.asarray(e_h, dtype=float)
        self.E = self.e_h.size
        self.check_ptr = np.searchsorted(self.e_check,
                                         np.arange(n + 1)).astype(np.int64)
        row_deg = np.diff(self.check_ptr)
        col_deg = np.bincount(self.e_var, minlength=n)
        self.uniform_rows = bool((row_deg == row_deg[0]).all())
        self.degree = int(row_deg[0]) if self.uniform_rows else 0
        if (col_deg == col_deg[0]).all():
            order = np.argsort(self.e_var, kind="stable")
            self.var_edge_idx = order.reshape(n, int(col_deg[0]))
        else:
            self.var_edge_idx = None
        self.t_max = _max_period(icm)
        step_min = 1.0 / (cfg.fft_size * np.abs(self.e_h).max())
        if step_min <= 0:
            raise ValueError("degenerate row values")

    def _grids(self, y, fading, sigma2):
        """Per-variable grid: step is the finer of the slack-padded span over
        pdf_length and the coarsest step that still covers the channel
        window within max_support samples; the tracked window always spans
        +-grid_range_sigmas around y_k/alpha."""
        cfg = self.cfg
        n = self.icm.n
        gains = np.repeat(fading.alphas, n // fading.L)
        degraded = gains <= 0.0
        safe = np.where(degraded, 1.0, gains)
        center = np.where(degraded, 0.0, y / safe)
        sig = math.sqrt(max(sigma2, 0.0)) / safe
        window = 2.0 * cfg.grid_range_sigmas * sig
        base_step = (window + 2.0 * cfg.slack_periods * self.t_max) / cfg.pdf_length
        cap = min(cfg.max_support, cfg.pdf_length)
        cap_step = window / cap
        gstep = np.maximum(base_step, cap_step)
        gstep = np.where(degraded, 8.0 * self.t_max / cap, gstep)
        sup = np.where(degraded, cap, window / gstep + 2)
        var_len = np.clip(sup, MIN_SUPPORT, cap).astype(np.int64)
        sig = np.where(degraded, np.inf, sig)
        grid0 = center - 0.5 * var_len * gstep
        return center, sig, degraded, grid0, gstep, var_len

    def decode(self, y: np.ndarray, fading: FadingRealization, sigma2: float,
               z_tx: np.ndarray | None = None) -> IterOutcome:
        t0 = time.perf_counter()
        cfg = self.cfg
        n = self.icm.n
        y = np.asarray(y, dtype=float)
        center, sig, degraded, grid0, gstep, var_len = self._grids(y, fading, sigma2)
        S = int(var_len.max())
        tgrid = np.arange(S)[None, :] * gstep[:, None] + grid0[:, None]
        pad = np.arange(S)[None, :] >= var_len[:, None]
        sig_eff = np.where(np.isfinite(sig), np.maximum(sig, 0.25 * gstep), 1.0)
        chan_log = -0.5 * ((tgrid - center[:, None]) / sig_eff[:, None]) ** 2
        chan_log[degraded] = 0.0
        chan_log[pad] = -1e30
        ev = self.e_var
        grid0_e = grid0[ev]
        gstep_e = gstep[ev]
        len_e = var_len[ev]
        E = self.E
        edge_log = self._buf("edge_log", (E, S))
        edge_log[:] = 0.0
        total_log = self._buf("total_log", (n, S))
        total_log[:] = chan_log
        folded = self._buf("folded", (E, cfg.fft_size))
        mvals = self._buf("mvals", (E, S))
        mvals[:] = LOG_FLOOR   # padding stays at the floor
        q_log = self._buf("q_log", (E, S))
        F = cfg.fft_size // 2 + 1
        out_spec = self._buf("out_spec", (E, F), dtype=complex)
        z_prev = None
        stable = 0
        iters = 0
        converged = False
        # box smoothing: each sample carries a step-wide slab of density, so
        # its wrapped image is a box of width step*|h| periods; without it a
        # coarse grid folds into a spiky comb
        beta = gstep_e * np.abs(self.e_h)
        smooth = np.sinc(np.arange(F)[None, :] * beta[:, None])
        for it in range(cfg.max_iterations):
            iters = it + 1
            np.subtract(total_log[ev], edge_log, out=q_log)
            q_log -= q_log.max(axis=1, keepdims=True)
            q = np.exp(q_log, out=q_log)
            _k_fold(q, self.e_h, len_e, grid0_e, gstep_e, folded)
            spec = np.fft.rfft(folded, axis=1)
            spec *= smooth
            self._combine(spec, out_spec)
            np.conj(out_spec, out=out_spec)
            msgs = np.fft.irfft(out_spec, cfg.fft_size, axis=1)
            np.maximum(msgs, 0.0, out=msgs)
            sums = msgs.sum(axis=1, keepdims=True)
            if (sums <= 0).any():
                raise ValueError("all-zero check message: numerical underflow")
            msgs /= sums
            _k_eval(msgs, self.e_h, len_e, grid0_e, gstep_e, mvals)
            np.maximum(mvals, LOG_FLOOR, out=mvals)
            edge_log = np.log(mvals, out=edge_log)
            if self.var_edge_idx is not None:
                np.add(chan_log, edge_log[self.var_edge_idx].sum(axis=1),
                       out=total_log)
            else:
                total_log = self._accumulate(chan_log, edge_log)
            if cfg.mode == "single-peak":
                _k_single_peak(total_log, var_len)
            x_hat = grid0 + gstep * total_log.argmax(axis=1)
            z_hat = np.rint(self.Hf @ x_hat).astype(np.int64)
            if z_prev is not None and np.array_equal(z_hat, z_prev):
                stable += 1
            else:
                stable = 1
            z_prev = z_hat
            if stable >= cfg.stability:
                converged = True
                break
        return IterOutcome(kind="decoded", z_hat=z_prev,
                           x_hat=self.G @ z_prev.astype(float),
                           iterations=iters, converged=converged,
                           elapsed_s=time.perf_counter() - t0)

    def _accumulate(self, chan_log, edge_log):
        total = chan_log.copy()
        np.add.at(total, self.e_var, edge_log)
        return total

    def _buf(self, name: str, shape, dtype=float) -> np.ndarray:
        arr = self._buffers.get(name)
        if arr is None or arr.shape != shape or arr.dtype != dtype:
            arr = np.empty(shape, dtype=dtype)
            self._buffers[name] = arr
        return arr

    def _combine(self, spec, out_spec):
        """Per-edge product of the other edges' spectra within each check."""
        n = self.icm.n
        F = spec.shape[1]
        if self.uniform_rows and self.degree == 4:
            s = spec.reshape(n, 4, F)
            o = out_spec.reshape(n, 4, F)
            p01 = s[:, 0] * s[:, 1]
            p23 = s[:, 2] * s[:, 3]
            np.multiply(s[:, 1], p23, out=o[:, 0])
            np.multiply(s[:, 0], p23, out=o[:, 1])
            np.multiply(p01, s[:, 3], out=o[:, 2])
            np.multiply(p01, s[:, 2], out=o[:, 3])
            return
        if self.uniform_rows and self.degree == 3:
            s = spec.reshape(n, 3, F)
            o = out_spec.reshape(n, 3, F)
            np.multiply(s[:, 1], s[:, 2], out=o[:, 0])
            np.multiply(s[:, 0], s[:, 2], out=o[:, 1])
            np.multiply(s[:, 0], s[:, 1], out=o[:, 2])
            return
        if self.uniform_rows:
            d = self.degree
            sp = spec.reshape(n, d, F)
            pre = np.ones((n, d + 1, F), dtype=complex)
            np.cumprod(sp, axis=1, out=pre[:, 1:])
            suf = np.ones((n, d + 1, F), dtype=complex)
            np.cumprod(sp[:, ::-1], axis=1, out=suf[:, 1:])
            out_spec[:] = (pre[:, :d] * suf[:, d - 1::-1]).reshape(self.E, F)
            return
        for i in range(n):
            a, b = self.check_ptr[i], self.check_ptr[i + 1]
            d = b - a
            pre = np.ones((d + 1, F), dtype=complex)
            for t in range(d):
                pre[t + 1] = pre[t] * spec[a + t]
            suf = np.ones(F, dtype=complex)
            for t in range(d - 1, -1, -1):
                out_spec[a + t] = pre[t] * suf
                suf = suf * spec[a + t]


_DECODER_CACHE: dict = {}


def decode_iterative(y: np.ndarray, fading: FadingRealization, sigma2: float,
                     icm: IntegerCheckMatrix, cfg: IterConfig,
                     z_tx: np.ndarray | None = None) -> IterOutcome:
    key = (id(icm), cfg)
    dec = _DECODER_CACHE.get(key)
    if dec is None:
        dec = IterativeDecoder(icm, cfg)
        _DECODER_CACHE[key] = dec
    return dec.decode(y, fading, sigma2, z_tx)
