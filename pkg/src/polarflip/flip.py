"""SC-Flip and thresholded SC-Flip decoding at leaf granularity."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .construction import PolarCode, crc_check
from .sc import LlrFrame, SCDecoder, _check_llr
from .tree import _mask_of


def omega_star(ebn0_db: float) -> float:
    """Approximate flip threshold as a linear function of Eb/N0 (dB)."""
    return 2.0 * (ebn0_db + 3.0)


def build_critical_set(code_or_mask) -> np.ndarray:
    """First leaf of every maximal all-free (Rate-1) subtree.

    A free leaf whose sibling is frozen counts as a Rate-1 subtree of size 1.
    Returns sorted leaf indices; empty for an all-frozen mask.
    """
    frozen = _mask_of(code_or_mask)
    out = []

    def walk(lo, size):
        seg = frozen[lo:lo + size]
        if not seg.any():
            out.append(lo)
        elif seg.all():
            return
        else:
            half = size // 2
            walk(lo, half)
            walk(lo + half, half)

    walk(0, frozen.size)
    return np.array(out, dtype=np.int64)


@dataclass
class FlipPlan:
    """Ordered flip agenda built from a failed first pass."""

    candidates: list = field(default_factory=list)  # [(leaf indices tuple, metric)]
    t_max: int = 0
    cursor: int = 0

    def __len__(self):
        return len(self.candidates)

    def __iter__(self):
        while self.cursor < len(self.candidates):
            cand = self.candidates[self.cursor]
            self.cursor += 1
            yield cand


def scf_plan(code: PolarCode, frame: LlrFrame, t_max: int) -> FlipPlan:
    """Free leaves by ascending |LLR| (ties: lower index first), cut at t_max."""
    pos = code.info_positions
    mag = np.abs(frame.leaf_llr[pos])
    order = np.argsort(mag, kind="stable")[: max(t_max, 0)]
    return FlipPlan([((int(pos[k]),), float(mag[k])) for k in order], t_max)


def tscf_plan(frame: LlrFrame, critical_set, omega: float, t_max: int) -> FlipPlan:
    """Critical-set leaves with |LLR| <= omega, in order of appearance."""
    cands = []
    for i in sorted(int(i) for i in critical_set):
        m = abs(float(frame.leaf_llr[i]))
        if m <= omega:
            cands.append(((i,), m))
    return FlipPlan(cands[: max(t_max, 0)], t_max)


class FlipResult(NamedTuple):
    hard_out: np.ndarray
    iterations: int
    success: bool


def _crc_ok(code: PolarCode, u_hat) -> bool:
    return crc_check(u_hat[code.info_positions], code.crc_poly, code.crc_len)


def _require_crc(code: PolarCode):
    if code.crc_len < 1:
        raise ValueError("flip decoding needs a CRC (crc_len >= 1)")


def _retry(decoder: SCDecoder, llr, first: LlrFrame, plan: FlipPlan) -> FlipResult:
    code = decoder.code
    if _crc_ok(code, first.hard_out):
        return FlipResult(first.hard_out, 1, True)
    u_hat, it = first.hard_out, 1
    for leaves, _ in plan:
        u_hat = decoder.decode(llr, leaves).hard_out
        it += 1
        if _crc_ok(code, u_hat):
            return FlipResult(u_hat, it, True)
    return FlipResult(u_hat, it, False)


def scf_decode(code: PolarCode, channel_llr, t_max: int) -> FlipResult:
    """SC-Flip: after a CRC failure, retry with the least reliable leaves flipped."""
    _require_crc(code)
    llr = _check_llr(code, channel_llr)
    dec = SCDecoder(code)
    first = dec.decode(llr)
    return _retry(dec, llr, first, scf_plan(code, first, t_max))


def tscf_decode(code: PolarCode, channel_llr, t_max: int, omega: float,
                cs=None) -> FlipResult:
    """Thresholded SC-Flip over a critical set.

    The plan is fixed from the first pass: critical-set leaves whose |LLR|
    does not exceed ``omega``, tried in index order.
    """
    _require_crc(code)
    if not np.isfinite(omega):
        raise ValueError("omega must be finite")
    if cs is None:
        cs = build_critical_set(code)
    llr = _check_llr(code, channel_llr)
    dec = SCDecoder(code)
    first = dec.decode(llr)
    return _retry(dec, llr, first, tscf_plan(first, cs, omega, t_max))


def flip_and_redecode(code: PolarCode, channel_llr, flip_set) -> LlrFrame:
    """SC pass with the decisions at ``flip_set`` inverted; later leaves follow."""
    return SCDecoder(code).decode(channel_llr, flip_set)
