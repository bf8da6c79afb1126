"""Successive-cancellation decoding over min-sum LLRs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._engine import Workspace
from .construction import PolarCode
from .tree import cached_tree


def f_kernel(a, b):
    """Min-sum check-node update: sign(a) sign(b) min(|a|, |b|)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
    return out if out.ndim else float(out)


def g_kernel(a, b, beta):
    """Variable-node update ``b + (1 - 2 beta) a``."""
    out = np.asarray(b, dtype=float) + (1 - 2 * np.asarray(beta, dtype=float)) * np.asarray(a, dtype=float)
    return out if out.ndim else float(out)


def combine(beta_l, beta_r):
    """Parent partial sums: ``[beta_l XOR beta_r, beta_r]``."""
    beta_l = np.asarray(beta_l, dtype=np.uint8)
    beta_r = np.asarray(beta_r, dtype=np.uint8)
    if beta_l.shape != beta_r.shape:
        raise ValueError("partial-sum halves must have equal length")
    return np.concatenate([beta_l ^ beta_r, beta_r])


@dataclass
class LlrFrame:
    """Result of one SC pass.

    ``leaf_llr[i]`` is the decision LLR seen at leaf ``i``; ``hard_out`` is
    the leaf estimate u_hat and ``codeword`` the root partial sums.
    """

    channel_llr: np.ndarray
    leaf_llr: np.ndarray
    hard_out: np.ndarray
    codeword: np.ndarray
    forced: int = -1

    def payload(self, code: PolarCode) -> np.ndarray:
        return self.hard_out[code.info_positions[: code.info_len]]


def _check_llr(code, channel_llr):
    llr = np.ascontiguousarray(channel_llr, dtype=np.float64)
    if llr.shape != (code.N,):
        raise ValueError(f"expected {code.N} channel LLRs, got shape {llr.shape}")
    return llr


class SCDecoder:
    """Leaf-level SC decoder bound to one code.

    Holds mutable scratch buffers; use one instance per thread.
    """

    def __init__(self, code: PolarCode):
        self.code = code
        self.ws = Workspace(cached_tree(code, False))

    def _run(self, llr, flips=(), oracle_u=None) -> LlrFrame:
        ws = self.ws
        for i in flips:
            ws.flip_a[i] = 0
        try:
            forced = ws.decode(llr, oracle_u)
        finally:
            ws.flip_a[:] = -1
        return LlrFrame(llr.copy(), ws.rec.copy(), ws.u_hat.copy(),
                        ws.beta[0, ws.N:].copy(), forced)

    def decode(self, channel_llr, flips=()) -> LlrFrame:
        """SC decode, inverting the Eq.-2 decision at every leaf in ``flips``."""
        llr = _check_llr(self.code, channel_llr)
        flips = sorted(set(int(i) for i in flips))
        if any(i < 0 or i >= self.code.N for i in flips):
            raise IndexError("flip index out of range")
        if any(self.code.frozen_mask[i] for i in flips):
            raise ValueError("cannot flip a frozen leaf")
        # in the unpruned tree unit id == leaf index
        return self._run(llr, flips)

    def oracle_decode(self, channel_llr, true_u):
        llr = _check_llr(self.code, channel_llr)
        true_u = np.asarray(true_u, dtype=np.uint8)
        if true_u.shape != (self.code.N,):
            raise ValueError("true_u must have length N")
        frame = self._run(llr, oracle_u=true_u)
        return frame, bool(np.array_equal(frame.hard_out, true_u))


def sc_decode(code: PolarCode, channel_llr) -> LlrFrame:
    """Plain SC decoding (left-first depth-first traversal)."""
    return SCDecoder(code).decode(channel_llr)


def sc_oracle_decode(code: PolarCode, channel_llr, true_u):
    """Genie-aided SC: the first wrong non-frozen decision is replaced by the
    transmitted bit, once per pass.

    Returns ``(frame, success)`` where success means ``hard_out == true_u``.
    """
    return SCDecoder(code).oracle_decode(channel_llr, true_u)


def leaf_llr_of(frame: LlrFrame, i: int) -> float:
    if not 0 <= i < frame.leaf_llr.size:
        raise IndexError(f"leaf index {i} out of range")
    return float(frame.leaf_llr[i])
