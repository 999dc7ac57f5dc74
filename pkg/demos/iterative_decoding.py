"""Iterative decoding of the n = 100 lattices, at demo scale.

Decodes a handful of channel realizations through the quantized-pdf belief
propagation decoder for the order-2 and order-4 lattices and prints a short
error-rate table against the outage limit.  The full 400-error sweeps live
in the acceptance suite; this is a taste with small counts.

Runtime: a few minutes.
"""

import numpy as np

from divlat import pol_oracle
from divlat.channel import apply_channel, sample_fading, trial_rng
from divlat.experiments import bp_lattice_L2, bp_lattice_L4
from divlat.iterative import IterConfig, IterativeDecoder

for label, icm, cfg, grid in (
    ("order 2, n=100, d=4", bp_lattice_L2(),
     IterConfig(pdf_length=1 << 16, fft_size=1024, max_iterations=40),
     (20.0, 24.0)),
    ("order 4, n=100, d=3", bp_lattice_L4(),
     IterConfig(pdf_length=1 << 18, fft_size=2048, L=4, max_iterations=40),
     (20.0, 24.0)),
):
    print(f"== {label} ==")
    dec = IterativeDecoder(icm, cfg)
    detG = abs(float(np.linalg.det(dec.G)))
    x = np.zeros(100)
    for db in grid:
        gamma = 10 ** (db / 10)
        sigma2 = detG ** (2 / 100) / gamma
        errs = trials = iters = 0
        while errs < 25 and trials < 1500:
            rng = trial_rng(77, trials)
            fading = sample_fading(icm.L, rng)
            y = apply_channel(x, fading, sigma2, rng)
            out = dec.decode(y, fading, sigma2)
            errs += int((out.z_hat != 0).any())
            iters += out.iterations
            trials += 1
        pol = pol_oracle(gamma, icm.L).p_out
        print(f"  {db:5.1f} dB: per={errs / trials:.4f} ({errs}/{trials}), "
              f"outage limit {pol:.4f}, {iters / trials:.1f} iterations/decode")
    print()

print("single decode, step by step (order 2):")
icm = bp_lattice_L2()
dec = IterativeDecoder(icm, IterConfig(max_iterations=30))
detG = abs(float(np.linalg.det(dec.G)))
rng = trial_rng(123)
z = rng.integers(-2, 3, size=100)
sigma2 = detG ** (2 / 100) / 10 ** 2.4
fading = sample_fading(2, rng)
y = apply_channel(dec.G @ z.astype(float), fading, sigma2, rng)
out = dec.decode(y, fading, sigma2)
print(f"  fading alphas: {np.round(fading.alphas, 3)}")
print(f"  converged in {out.iterations} iterations; "
      f"recovered the transmitted point: {np.array_equal(out.z_hat, z)}")
