"""Canonical lattices and sweep configurations for the desk-scale studies.

These presets pin every parameter (dimensions, degrees, scale pairs, seeds,
SNR grids, error targets) so the long Monte Carlo runs are reproducible
bit-for-bit and their results can be cached by configuration digest.
"""

from __future__ import annotations

import os
from pathlib import Path

from .algebra import AlgebraicScalar, rational, sqrt_int
from .construction import (GeneratingSequence, IntegerCheckMatrix, build_fd_bp,
                           build_fd_bp_L4, build_fd_ml_random,
                           build_latin_square_ldlc)
from .sim import SweepConfig

INV = AlgebraicScalar.inv_sqrt

DEFAULT_RESULTS_DIR = Path(__file__).resolve().parents[2] / "results"


def enable_results_cache() -> Path:
    """Point the sweep cache at the repository results directory unless the
    caller already chose one via DIVLAT_RESULTS."""
    os.environ.setdefault("DIVLAT_RESULTS", str(DEFAULT_RESULTS_DIR))
    return Path(os.environ["DIVLAT_RESULTS"])


def _procs() -> int:
    return int(os.environ.get("DIVLAT_PROCESSES", "0") or 0)


# -- lattices ---------------------------------------------------------------


def ml_fd_lattice(n: int = 16, d: int = 4, seed: int = 7) -> IntegerCheckMatrix:
    """Checkerboard pair (1, sqrt2) on full-rank quadrants: the ML study
    lattice at desk scale."""
    return build_fd_ml_random(n, d, rational(1), sqrt_int(2),
                              variant="checkerboard", seed=seed)


def ml_random_lattice(n: int = 16, d: int = 4, seed: int = 7) -> IntegerCheckMatrix:
    """Plain random Latin-square LDLC with rational values: provably not
    full-diversity (single scale ray), the comparison curve."""
    seq = GeneratingSequence.of(rational(1), *[rational(1, 2)] * (d - 1))
    return build_latin_square_ldlc(n, seq, seed=seed)


def bp_lattice_L2(n: int = 100, d: int = 4, seed: int = 11) -> IntegerCheckMatrix:
    """Iterative-decoding lattice, order 2: theta pair (1, 1/sqrt2)."""
    return build_fd_bp(n, d, rational(1), INV(2), seed=seed)


def bp_lattice_L4(n: int = 100, seed: int = 13) -> IntegerCheckMatrix:
    """Iterative-decoding lattice, order 4: thetas (1, 1/sqrt2, 1/sqrt3,
    1/sqrt7), generating sequence (1, 1/sqrt3, 1/sqrt5)."""
    thetas = [rational(1), INV(2), INV(3), INV(7)]
    seq = GeneratingSequence.of(rational(1), INV(3), INV(5))
    return build_fd_bp_L4(n, thetas, seq, seed=seed)


# -- sweeps ------------------------------------------------------------------

ML_GRID = (16.0, 18.5, 21.0, 23.5, 26.0, 28.5, 31.0, 33.5, 36.0)
ML_TOP_TWO = ML_GRID[-2:]
ML_NODE_CAP = 10 ** 7      # desk-scale enumeration budget per point


def ml_gated_sweep(margin: float = 1.0) -> SweepConfig:
    return SweepConfig(snr_db_list=ML_GRID, decoder="ml", seed=101,
                       target_errors=400, max_trials=5_000_000,
                       gate_margin=margin, node_cap=ML_NODE_CAP,
                       processes=_procs())


def ml_ungated_top_sweep() -> SweepConfig:
    return SweepConfig(snr_db_list=ML_TOP_TWO, decoder="ml", seed=101,
                       target_errors=400, max_trials=5_000_000,
                       gate_margin=0.0, node_cap=ML_NODE_CAP,
                       processes=_procs())


def ml_gated_top_sweep() -> SweepConfig:
    return SweepConfig(snr_db_list=ML_TOP_TWO, decoder="ml", seed=101,
                       target_errors=400, max_trials=5_000_000,
                       gate_margin=1.0, node_cap=ML_NODE_CAP,
                       processes=_procs())


def ml_random_sweep() -> SweepConfig:
    return SweepConfig(snr_db_list=ML_GRID, decoder="ml", seed=103,
                       target_errors=400, max_trials=2_000_000,
                       gate_margin=1.0, node_cap=ML_NODE_CAP,
                       processes=_procs())


ITER_L2_GRID = (21.5, 24.0, 26.5, 29.0, 31.25)
ITER_L4_GRID = (22.0, 24.5, 27.0, 29.5)


def iter_sweep_L2() -> SweepConfig:
    return SweepConfig(snr_db_list=ITER_L2_GRID, decoder="iter", seed=201,
                       target_errors=400, max_trials=400_000,
                       pdf_length=1 << 16, fft_size=1024, max_iterations=60,
                       processes=_procs())


def iter_sweep_L4() -> SweepConfig:
    return SweepConfig(snr_db_list=ITER_L4_GRID, decoder="iter", seed=202,
                       target_errors=400, max_trials=400_000,
                       pdf_length=1 << 18, fft_size=2048, max_iterations=60,
                       processes=_procs())
