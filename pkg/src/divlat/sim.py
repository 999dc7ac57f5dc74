"""Experiment orchestration: SNR sweeps, error counting, slope fits.

A sweep decodes batches of independent trials per SNR point until the target
error count (or the trial cap) is reached.  Every trial draws its randomness
from a stream keyed by (seed, point index, trial index), so results are
bit-identical no matter how trials are batched or spread over worker
processes.  Completed sweeps are cached by a digest of the full
configuration and matrix, because identical configurations produce identical
records.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
from dataclasses import dataclass, field, asdict
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from .algebra import invert_float
from .channel import (FadingRealization, apply_channel, is_outage, pol_oracle,
                      sample_fading, trial_rng)
from .construction import IntegerCheckMatrix, icm_from_text, icm_to_text, read_icm
from .iterative import IterConfig, IterativeDecoder
from .sphere import DEFAULT_NODE_CAP, FadedLattice, gated_decode, sphere_decode

__all__ = [
    "SweepConfig",
    "SimRecord",
    "SlopeFit",
    "run_sweep",
    "fit_slope",
    "runtime_report",
    "write_records",
    "read_records",
    "records_to_csv",
    "parse_config_text",
    "config_from_file",
    "CSV_COLUMNS",
]

CSV_COLUMNS = ["snr_db", "trials", "errors", "outages_declared", "cap_hits",
               "per", "stderr", "pol_ref", "elapsed_ms", "nodes_visited",
               "avg_iterations"]

SCHEMA_VERSION = 3


@dataclass(frozen=True)
class SweepConfig:
    snr_db_list: tuple[float, ...]
    decoder: str                      # "ml" | "iter"
    seed: int = 0
    target_errors: int = 400
    max_trials: int = 10 ** 7
    gate_margin: float = 1.0          # 0 disables the outage gate (ml only)
    tx: str = "zero"                  # "zero" | "random"
    node_cap: int = DEFAULT_NODE_CAP
    pdf_length: int = 1 << 16
    fft_size: int = 1024
    max_iterations: int = 200
    mode: str = "full"
    matrix_path: str | None = None
    output_path: str | None = None
    processes: int = 0                # 0: use DIVLAT_PROCESSES or 1
    batch: int = 512

    def __post_init__(self):
        if not self.snr_db_list:
            raise ValueError("snr_db_list is empty")
        object.__setattr__(self, "snr_db_list",
                           tuple(float(x) for x in self.snr_db_list))
        if list(self.snr_db_list) != sorted(self.snr_db_list):
            raise ValueError("snr_db_list must be ascending")
        if self.target_errors < 1:
            raise ValueError("target_errors must be at least 1")
        if self.decoder not in ("ml", "iter"):
            raise ValueError("decoder must be 'ml' or 'iter'")
        if self.tx not in ("zero", "random"):
            raise ValueError("tx must be 'zero' or 'random'")

    def iter_config(self, L: int) -> IterConfig:
        return IterConfig(pdf_length=self.pdf_length, fft_size=self.fft_size,
                          max_iterations=self.max_iterations, L=L,
                          mode=self.mode)

    def worker_count(self) -> int:
        if self.processes > 0:
            return self.processes
        env = os.environ.get("DIVLAT_PROCESSES")
        return max(1, int(env)) if env else 1


@dataclass
class SimRecord:
    snr_db: float
    trials: int
    errors: int
    outages_declared: int
    cap_hits: int
    per: float
    stderr: float
    pol_ref: float
    elapsed_ms: float
    nodes_visited: int
    avg_iterations: float

    @classmethod
    def from_row(cls, row: dict) -> "SimRecord":
        return cls(snr_db=float(row["snr_db"]), trials=int(row["trials"]),
                   errors=int(row["errors"]),
                   outages_declared=int(row["outages_declared"]),
                   cap_hits=int(row["cap_hits"]), per=float(row["per"]),
                   stderr=float(row["stderr"]), pol_ref=float(row["pol_ref"]),
                   elapsed_ms=float(row["elapsed_ms"]),
                   nodes_visited=int(row["nodes_visited"]),
                   avg_iterations=float(row["avg_iterations"]))


# ---------------------------------------------------------------------------
# Trial batches (worker side)
# ---------------------------------------------------------------------------

_W: dict = {}


def _init_worker(icm_text: str, cfg: SweepConfig):
    icm = icm_from_text(icm_text)
    Hf = icm.to_float()
    G = invert_float(Hf)
    state = {
        "icm": icm, "cfg": cfg, "G": G, "Hf": Hf,
        "detG": abs(float(np.linalg.det(G))),
        "n": icm.n, "L": icm.L,
    }
    if cfg.decoder == "iter":
        state["decoder"] = IterativeDecoder(icm, cfg.iter_config(icm.L))
    _W.clear()
    _W.update(state)


def _run_batch(task):
    point_idx, gamma, t0, t1 = task
    cfg: SweepConfig = _W["cfg"]
    n, L, G, detG = _W["n"], _W["L"], _W["G"], _W["detG"]
    sigma2 = detG ** (2.0 / n) / gamma
    errors = outages = caps = nodes = 0
    iters = 0
    elapsed = 0.0
    for t in range(t0, t1):
        rng = trial_rng(cfg.seed, point_idx, t)
        fading = sample_fading(L, rng)
        if cfg.tx == "random":
            z_tx = rng.integers(-2, 3, size=n)
        else:
            z_tx = np.zeros(n, dtype=np.int64)
        x = G @ z_tx.astype(float)
        y = apply_channel(x, fading, sigma2, rng)
        if cfg.decoder == "ml":
            gated = cfg.gate_margin and cfg.gate_margin > 0
            if gated and is_outage(fading, gamma, cfg.gate_margin):
                outages += 1
                errors += 1
                continue
            t_start = time.perf_counter()
            try:
                lat = FadedLattice.build(G, fading)
            except ValueError:
                # too deep to factor: enumeration is infeasible
                caps += 1
                errors += 1
                elapsed += time.perf_counter() - t_start
                continue
            out = sphere_decode(y, lat, node_cap=cfg.node_cap)
            elapsed += time.perf_counter() - t_start
            nodes += out.nodes_visited
            if out.capped:
                caps += 1
                errors += 1
            elif not np.array_equal(out.z_hat, z_tx):
                errors += 1
        else:
            out = _W["decoder"].decode(y, fading, sigma2, z_tx)
            elapsed += out.elapsed_s
            iters += out.iterations
            if not out.converged:
                caps += 1
            if not np.array_equal(out.z_hat, z_tx):
                errors += 1
    return (point_idx, t1 - t0, errors, outages, caps, nodes, iters, elapsed)


# ---------------------------------------------------------------------------
# Sweep driver
# ---------------------------------------------------------------------------


def _cache_key(cfg: SweepConfig, icm_text: str) -> str:
    payload = asdict(cfg)
    payload.pop("output_path")
    payload.pop("processes")
    payload["schema"] = SCHEMA_VERSION
    payload["matrix"] = icm_text
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:24]


def _cache_dir() -> Path | None:
    env = os.environ.get("DIVLAT_RESULTS")
    if env == "":
        return None
    return Path(env) if env else None


def run_sweep(cfg: SweepConfig, icm: IntegerCheckMatrix | None = None,
              verbose: bool = False) -> list[SimRecord]:
    """Run (or reload) the sweep described by cfg.

    Per SNR point, batches of trials run until target_errors or max_trials.
    Deterministic given (cfg, matrix); the worker count and batch schedule
    do not affect the counts.
    """
    if icm is None:
        if not cfg.matrix_path:
            raise ValueError("need a matrix or a matrix_path")
        icm = read_icm(cfg.matrix_path)
    icm_text = icm_to_text(icm)
    cache = _cache_dir()
    key = _cache_key(cfg, icm_text)
    if cache is not None:
        hit = cache / f"{key}.csv"
        if hit.exists():
            records = read_records(hit)
            if cfg.output_path:
                write_records(cfg.output_path, records)
            return records
    records = _run_sweep_live(cfg, icm, icm_text, verbose)
    if cache is not None:
        cache.mkdir(parents=True, exist_ok=True)
        write_records(cache / f"{key}.csv", records)
    if cfg.output_path:
        write_records(cfg.output_path, records)
    return records


def _run_sweep_live(cfg, icm, icm_text, verbose) -> list[SimRecord]:
    workers = cfg.worker_count()
    pool = None
    if workers > 1:
        # fork: workers inherit compiled kernels and no __main__ re-import
        ctx = get_context("fork")
        pool = ctx.Pool(workers, initializer=_init_worker,
                        initargs=(icm_text, cfg))
    _init_worker(icm_text, cfg)
    records = []
    try:
        for p, db in enumerate(cfg.snr_db_list):
            gamma = 10.0 ** (db / 10.0)
            trials = errors = outages = caps = nodes = iters = 0
            elapsed = 0.0
            while errors < cfg.target_errors and trials < cfg.max_trials:
                # span is independent of the worker count so the stopping
                # point, and therefore every count, is schedule-invariant
                span = min(cfg.batch, cfg.max_trials - trials)
                bounds = np.linspace(trials, trials + span,
                                     max(workers, 1) + 1, dtype=int)
                tasks = [(p, gamma, int(a), int(b))
                         for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
                if pool is not None:
                    results = pool.map(_run_batch, tasks)
                else:
                    results = [_run_batch(t) for t in tasks]
                for (_, nt, ne, no, nc, nn, ni, el) in results:
                    trials += nt
                    errors += ne
                    outages += no
                    caps += nc
                    nodes += nn
                    iters += ni
                    elapsed += el
            per = errors / trials if trials else 0.0
            rec = SimRecord(
                snr_db=db, trials=trials, errors=errors,
                outages_declared=outages, cap_hits=caps, per=per,
                stderr=math.sqrt(per * (1 - per) / trials) if trials else 0.0,
                pol_ref=pol_oracle(gamma, icm.L).p_out if icm.L <= 4 else float("nan"),
                elapsed_ms=elapsed * 1e3, nodes_visited=nodes,
                avg_iterations=iters / trials if trials else 0.0)
            records.append(rec)
            if verbose:
                print(f"  {db:6.2f} dB: per={per:.3e} "
                      f"({errors}/{trials}), {elapsed:.1f}s decode time",
                      flush=True)
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    return records


# ---------------------------------------------------------------------------
# Post-processing
# ---------------------------------------------------------------------------


@dataclass
class SlopeFit:
    snr_window_db: tuple[float, float]
    slope: float
    residual: float
    points: int

    @property
    def diversity(self) -> float:
        return -self.slope


def fit_slope(records: list[SimRecord], window_db: tuple[float, float] | None = None,
              per_range: tuple[float, float] | None = None,
              min_errors: int | None = None) -> SlopeFit:
    """Least-squares slope of log10(per) against log10(gamma)."""
    sel = list(records)
    if min_errors is not None:
        sel = [r for r in sel if r.errors >= min_errors]
    if window_db is not None:
        sel = [r for r in sel if window_db[0] <= r.snr_db <= window_db[1]]
    if per_range is not None:
        lo, hi = min(per_range), max(per_range)
        sel = [r for r in sel if lo <= r.per <= hi]
    sel = [r for r in sel if r.per > 0]
    if len(sel) < 2:
        raise ValueError("need at least two points with errors for a slope fit")
    x = np.array([r.snr_db / 10.0 for r in sel])      # log10(gamma)
    yv = np.log10([r.per for r in sel])
    A = np.stack([x, np.ones_like(x)], axis=1)
    coef, res, *_ = np.linalg.lstsq(A, yv, rcond=None)
    resid = float(np.sqrt(res[0] / len(sel))) if res.size else 0.0
    return SlopeFit(snr_window_db=(float(min(r.snr_db for r in sel)),
                                   float(max(r.snr_db for r in sel))),
                    slope=float(coef[0]), residual=resid, points=len(sel))


def runtime_report(gated: list[SimRecord], ungated: list[SimRecord]) -> dict:
    """Per-SNR elapsed ratio plus totals; grids must match."""
    if [r.snr_db for r in gated] != [r.snr_db for r in ungated]:
        raise ValueError("SNR grids do not match")
    rows = []
    for g, u in zip(gated, ungated):
        rows.append({
            "snr_db": g.snr_db,
            "gated_ms": g.elapsed_ms,
            "ungated_ms": u.elapsed_ms,
            "ratio": g.elapsed_ms / u.elapsed_ms if u.elapsed_ms > 0 else float("nan"),
            "gated_per": g.per,
            "ungated_per": u.per,
        })
    return {
        "rows": rows,
        "total_gated_ms": sum(r.elapsed_ms for r in gated),
        "total_ungated_ms": sum(r.elapsed_ms for r in ungated),
    }


# ---------------------------------------------------------------------------
# CSV and config files
# ---------------------------------------------------------------------------


def records_to_csv(records: list[SimRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        d = asdict(r)
        w.writerow([repr(float(d[c])) if isinstance(d[c], float) else d[c]
                    for c in CSV_COLUMNS])
    return buf.getvalue()


def write_records(path, records: list[SimRecord]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write(records_to_csv(records))


def read_records(path) -> list[SimRecord]:
    with open(path) as f:
        return [SimRecord.from_row(row) for row in csv.DictReader(f)]


def parse_config_text(text: str) -> dict:
    """Flat key=value lines; '#' starts a comment."""
    out: dict = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line: {line!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key] = val
    return out


def config_from_file(path, **overrides) -> SweepConfig:
    raw = parse_config_text(Path(path).read_text())
    kwargs: dict = {}
    if "snr_db_list" in raw:
        kwargs["snr_db_list"] = tuple(float(s) for s in raw.pop("snr_db_list").split(","))
    for key, val in raw.items():
        if key not in SweepConfig.__dataclass_fields__:
            raise ValueError(f"unknown config key {key!r}")
        if key in ("decoder", "tx", "mode", "matrix_path", "output_path"):
            kwargs[key] = val
        elif key in ("gate_margin",):
            kwargs[key] = float(val)
        else:
            kwargs[key] = int(val)
    kwargs.update(overrides)
    return SweepConfig(**kwargs)
