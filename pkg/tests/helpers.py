"""Shared test utilities: noisy frames and per-frame access to the batch engine."""

import numpy as np

from polarflip import _engine as E
from polarflip.construction import encode_batch
from polarflip.sim import DecoderSpec, _Plan


def frames(code, count, sigma, seed):
    rng = np.random.default_rng(seed)
    p = rng.integers(0, 2, (count, code.info_len)).astype(np.uint8)
    u, x = encode_batch(code, p)
    y = 1.0 - 2.0 * x + sigma * rng.standard_normal(x.shape)
    return u, 2.0 * y / sigma**2


def engine_batch(code, name, llrs, u, t_max=10, omega=None, ebn0=2.5):
    """Run the compiled batch decoder; returns (iterations, crc_ok, payload_ok)."""
    plan = _Plan(code, DecoderSpec(name, t_max, omega), ebn0)
    B = llrs.shape[0]
    it = np.zeros(B, dtype=np.int64)
    crc_ok = np.zeros(B, dtype=np.bool_)
    good = np.zeros(B, dtype=np.bool_)
    E.decode_batch(plan.mode, plan.ops, plan.lo, plan.stage, plan.kind,
                   np.ascontiguousarray(llrs), np.ascontiguousarray(u),
                   code.info_positions.astype(np.int64), code.info_len, code.crc_len,
                   code.crc_poly, plan.eligible, plan.omega, plan.order, plan.t_max, 0,
                   it, crc_ok, good)
    return it, crc_ok, good
