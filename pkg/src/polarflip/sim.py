"""Monte-Carlo FER / decoding-step simulation over BPSK-AWGN."""

from __future__ import annotations

import csv
import json
import logging
import math
import subprocess
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import _engine as E
from .analysis import ebn0_to_sigma2
from .construction import PolarCode, crc_matrix, encode_batch
from .flip import build_critical_set, omega_star
from .tree import cached_tree

log = logging.getLogger(__name__)

DECODERS = ("SC", "SCO", "SCF", "TSCF", "FAST_SC", "FAST_SCF", "FAST_TSCF")
FLIP_DECODERS = ("SCF", "TSCF", "FAST_SCF", "FAST_TSCF")
CSV_FIELDS = ("decoder", "ebn0_db", "frames", "frame_errors", "fer", "avg_iterations",
              "avg_steps", "wall_time_s", "crc_fail_errors", "undetected_errors")


@dataclass(frozen=True)
class DecoderSpec:
    """Decoder choice; ``omega=None`` means the Eb/N0-dependent default."""

    name: str
    t_max: int = 10
    omega: float | None = None

    def __post_init__(self):
        if self.name not in DECODERS:
            raise ValueError(f"unknown decoder {self.name!r}; expected one of {DECODERS}")
        if self.t_max < 0:
            raise ValueError("t_max must be >= 0")

    def omega_at(self, ebn0_db: float) -> float:
        if self.name in ("SCF", "FAST_SCF"):
            return math.inf
        return omega_star(ebn0_db) if self.omega is None else float(self.omega)

    @property
    def omega_mode(self) -> str:
        return "auto" if self.omega is None else f"{self.omega:g}"


@dataclass(frozen=True)
class ChannelConfig:
    ebn0_db: float
    rate_for_noise: float
    seed: int = 0

    @property
    def sigma2(self) -> float:
        s2 = float(ebn0_to_sigma2(self.ebn0_db, self.rate_for_noise))
        if not s2 > 0:
            raise ValueError("noise variance must be positive")
        return s2


@dataclass(frozen=True)
class StopRule:
    """Stop at ``min_errors`` frame errors or ``max_frames`` frames."""

    min_errors: int = 200
    max_frames: int = 10_000_000


@dataclass
class SimResult:
    decoder: str
    ebn0_db: float
    frames: int
    frame_errors: int
    total_iterations: int
    total_steps: int
    wall_time_s: float
    crc_fail_errors: int = 0
    undetected_errors: int = 0
    t_max: int = 0
    omega: float = math.inf

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else float("nan")

    @property
    def avg_steps(self) -> float:
        return self.total_steps / self.frames if self.frames else float("nan")

    @property
    def avg_iterations(self) -> float:
        return self.total_iterations / self.frames if self.frames else float("nan")

    @property
    def std_err(self) -> float:
        p = self.fer
        return math.sqrt(p * (1 - p) / self.frames) if self.frames else float("nan")

    def row(self) -> dict:
        d = asdict(self)
        d.update(fer=self.fer, avg_iterations=self.avg_iterations, avg_steps=self.avg_steps)
        return d


def channel_transmit(codeword, cfg: ChannelConfig, rng) -> np.ndarray:
    """BPSK (0 -> +1) over AWGN; returns LLRs ``2 y / sigma^2``.

    Accepts a single codeword or a ``(B, N)`` batch.
    """
    s2 = cfg.sigma2
    x = np.asarray(codeword)
    y = (1.0 - 2.0 * x) + math.sqrt(s2) * rng.standard_normal(x.shape)
    return (2.0 / s2) * y


def _cell_key(ebn0_db: float) -> int:
    return zlib.crc32(f"{float(ebn0_db):.6f}".encode())


def batch_rng(seed: int, ebn0_db: float, batch: int):
    """Generator for one batch of one SNR cell.

    The stream depends only on (seed, Eb/N0, batch index), so every decoder
    simulated at the same point sees the same frames.
    """
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, _cell_key(ebn0_db), batch])


class _Plan:
    """Engine arguments for one (code, decoder) pair."""

    def __init__(self, code: PolarCode, spec: DecoderSpec, ebn0_db: float):
        if spec.name in FLIP_DECODERS and code.crc_len < 1:
            raise ValueError(f"{spec.name} needs a CRC (crc_len >= 1)")
        fast = spec.name.startswith("FAST_")
        tree = cached_tree(code, fast)
        self.ops, self.lo, self.stage, self.kind = tree.schedule()
        self.steps_per_iteration = tree.steps_per_iteration()
        self.mode = {"SC": E.MODE_SC, "FAST_SC": E.MODE_SC, "SCO": E.MODE_ORACLE}.get(
            spec.name, E.MODE_FLIP)
        self.order = E.ORDER_METRIC if spec.name in ("SCF", "FAST_SCF") else E.ORDER_APPEARANCE
        self.omega = spec.omega_at(ebn0_db)
        if self.mode == E.MODE_FLIP and not self.omega == self.omega:
            raise ValueError("omega is NaN")
        self.t_max = spec.t_max if self.mode == E.MODE_FLIP else 0
        if spec.name == "TSCF":
            self.eligible = np.isin(self.lo, build_critical_set(code))
        else:
            self.eligible = np.ones(self.lo.size, dtype=np.bool_)


def run_experiment(code: PolarCode, spec: DecoderSpec, cfg, stop: StopRule | None = None,
                   seed: int = 0, batch_size: int = 1000) -> SimResult:
    """Simulate one decoder at one Eb/N0 until the stop rule fires.

    ``cfg`` is a :class:`ChannelConfig` or a bare Eb/N0 in dB (noise from
    the code rate K/N, seed from ``seed``). A frame error is a payload
    mismatch, whether or not the CRC passed.
    """
    if not isinstance(cfg, ChannelConfig):
        cfg = ChannelConfig(float(cfg), code.rate, seed)
    stop = stop or StopRule()
    plan = _Plan(code, spec, cfg.ebn0_db)
    info_pos = code.info_positions.astype(np.int64)
    crc_mat = crc_matrix(code.info_len, code.crc_poly, code.crc_len) if code.crc_len else None

    frames = errors = iters = crc_fail = undetected = 0
    t0 = time.perf_counter()
    batch = 0
    while frames < stop.max_frames and errors < stop.min_errors:
        rng = batch_rng(cfg.seed, cfg.ebn0_db, batch)
        payload = rng.integers(0, 2, size=(batch_size, code.info_len), dtype=np.uint8)
        u, x = encode_batch(code, payload, crc_mat)
        llr = channel_transmit(x, cfg, rng)
        take = min(batch_size, stop.max_frames - frames)
        it = np.zeros(take, dtype=np.int64)
        crc_ok = np.zeros(take, dtype=np.bool_)
        good = np.zeros(take, dtype=np.bool_)
        done = E.decode_batch(plan.mode, plan.ops, plan.lo, plan.stage, plan.kind,
                              llr[:take], u[:take], info_pos, code.info_len, code.crc_len,
                              code.crc_poly, plan.eligible, plan.omega, plan.order,
                              plan.t_max, stop.min_errors - errors, it, crc_ok, good)
        bad = ~good[:done]
        frames += done
        errors += int(bad.sum())
        iters += int(it[:done].sum())
        crc_fail += int((bad & ~crc_ok[:done]).sum())
        undetected += int((bad & crc_ok[:done]).sum())
        batch += 1
    wall = time.perf_counter() - t0
    res = SimResult(spec.name, float(cfg.ebn0_db), frames, errors, iters,
                    iters * plan.steps_per_iteration, wall, crc_fail, undetected,
                    plan.t_max, plan.omega)
    log.info("%s @ %.2f dB: %d/%d errors, FER %.3g, %.1fs", spec.name, cfg.ebn0_db,
             errors, frames, res.fer, wall)
    return res


def _run_cell(args):
    return run_experiment(*args)


def sweep(code: PolarCode, specs, ebn0_grid, stop: StopRule | None = None, seed: int = 0,
          workers: int = 1) -> list:
    """All decoders at all grid points, ordered decoder-major."""
    grid = [float(e) for e in ebn0_grid]
    if not grid:
        raise ValueError("Eb/N0 grid is empty")
    cells = [(code, spec, ChannelConfig(e, code.rate, seed), stop) for spec in specs for e in grid]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_run_cell, cells))
    return [_run_cell(c) for c in cells]


def version_string() -> str:
    from . import __version__

    try:
        rev = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True,
                             text=True, timeout=5, cwd=Path(__file__).parent).stdout.strip()
    except (OSError, subprocess.SubprocessError):
        rev = ""
    return f"{__version__}+{rev}" if rev else __version__


def emit_results(results, fmt: str, path, provenance: dict | None = None) -> Path:
    """Write results as CSV (flat rows) or JSON (rows plus provenance)."""
    path = Path(path)
    if fmt == "csv":
        with path.open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=CSV_FIELDS, extrasaction="ignore")
            w.writeheader()
            for r in results:
                w.writerow(r.row())
    elif fmt == "json":
        doc = {"provenance": {"version": version_string(), **(provenance or {})},
               "results": [asdict(r) for r in results]}
        path.write_text(json.dumps(doc, indent=2, default=_json_default))
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return path


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(f"not JSON serialisable: {type(o)}")


def load_results(path) -> list:
    """Inverse of the JSON form of :func:`emit_results`."""
    doc = json.loads(Path(path).read_text())
    names = {f.name for f in fields(SimResult)}
    return [SimResult(**{k: v for k, v in r.items() if k in names}) for r in doc["results"]]


def ebn0_at_fer(results, target: float = 1e-3) -> float:
    """Eb/N0 where the FER curve crosses ``target`` (log-linear interpolation).

    Returns NaN when the grid does not bracket the target.
    """
    pts = sorted((r.ebn0_db, r.fer) for r in results if r.frames)
    for (e0, f0), (e1, f1) in zip(pts, pts[1:]):
        if f0 >= target >= f1 and f0 > 0 and f1 > 0:
            if f0 == f1:
                return e0
            w = (math.log10(f0) - math.log10(target)) / (math.log10(f0) - math.log10(f1))
            return e0 + w * (e1 - e0)
    return float("nan")
