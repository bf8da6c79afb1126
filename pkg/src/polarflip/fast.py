"""Fast SC decoding over special nodes, and node-level flip decoding.

Special nodes are decoded straight from their top LLRs. Flip candidates are
taken at the top of the node as well, so no subtree is ever traversed:

* Rate-1: the single least reliable top bit, if ``min|alpha| <= omega``.
* Rep: the whole node, if ``|sum(alpha)| <= omega``.
* SPC: two candidates built from the three least reliable top bits,
  depending on the parity of the hard decisions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._engine import Workspace
from .construction import crc_check
from .tree import DecodeTree, Kind

MODES = ("SCF", "TSCF")


def decode_rate1(alpha) -> np.ndarray:
    return (np.asarray(alpha) < 0).astype(np.uint8)


def decode_rep(alpha) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    bit = 1 if alpha.sum() < 0 else 0
    return np.full(alpha.size, bit, dtype=np.uint8)


def decode_spc(alpha) -> np.ndarray:
    """Hard decisions, then fix odd parity at the least reliable position."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.size < 2:
        raise ValueError("SPC node needs at least two bits")
    beta = (alpha < 0).astype(np.uint8)
    if beta.sum() % 2:
        beta[np.argmin(np.abs(alpha))] ^= 1
    return beta


@dataclass(frozen=True)
class TopFlipCandidate:
    """Node-local indices ``eta`` to invert in the node's hard decisions.

    For SPC nodes the inversion applies to the sign decisions *before*
    the parity fix, which keeps every candidate parity-consistent.
    """

    eta: tuple
    metric: float
    unit: int = -1


def flip_candidates_rate1(alpha, omega):
    mag = np.abs(np.asarray(alpha, dtype=float))
    i = int(np.argmin(mag))  # first occurrence on ties
    if mag[i] <= omega:
        return TopFlipCandidate((i,), float(mag[i]))
    return None


def flip_candidates_rep(alpha, omega):
    alpha = np.asarray(alpha, dtype=float)
    s = abs(float(alpha.sum()))
    if s <= omega:
        return TopFlipCandidate(tuple(range(alpha.size)), s)
    return None


def flip_candidates_spc(alpha, omega):
    alpha = np.asarray(alpha, dtype=float)
    if alpha.size < 4:
        return []
    mag = np.abs(alpha)
    parity = int((alpha < 0).sum() % 2)
    i1, i2, i3 = (int(k) for k in np.argsort(mag, kind="stable")[:3])
    out = []
    for second in (i2, i3):
        if parity:
            eta, m = (second,), mag[second]
        else:
            eta, m = (i1, second), mag[i1] + mag[second]
        if m <= omega:
            out.append(TopFlipCandidate(eta, float(m)))
    return out


def steps_per_iteration(tree: DecodeTree) -> int:
    return tree.steps_per_iteration()


class FastDecoder:
    """Pruned-tree SC decoder; one instance per thread."""

    def __init__(self, tree: DecodeTree):
        self.tree = tree
        self.ws = Workspace(tree)
        self.units = tree.units()

    def decode(self, channel_llr, cand: TopFlipCandidate | None = None) -> np.ndarray:
        llr = np.ascontiguousarray(channel_llr, dtype=np.float64)
        if llr.shape != (self.tree.N,):
            raise ValueError(f"expected {self.tree.N} channel LLRs")
        ws = self.ws
        if cand is not None:
            ws.flip_a[cand.unit] = cand.eta[0]
            if len(cand.eta) == 2 and self.units[cand.unit].kind != Kind.REP:
                ws.flip_b[cand.unit] = cand.eta[1]
        try:
            ws.decode(llr)
        finally:
            ws.flip_a[:] = -1
            ws.flip_b[:] = -1
        return ws.u_hat.copy()

    def top_llrs(self, unit: int) -> np.ndarray:
        nd = self.units[unit]
        return self.ws.rec[nd.lo:nd.lo + nd.size].copy()

    def candidates(self, omega) -> list:
        """Flip candidates of the last pass, in order of appearance."""
        out = []
        for u, nd in enumerate(self.units):
            alpha = self.ws.rec[nd.lo:nd.lo + nd.size]
            if nd.kind == Kind.RATE1:
                found = [flip_candidates_rate1(alpha, omega)]
            elif nd.kind == Kind.REP:
                found = [flip_candidates_rep(alpha, omega)]
            elif nd.kind == Kind.SPC:
                found = flip_candidates_spc(alpha, omega)
            else:
                found = []
            out.extend(TopFlipCandidate(c.eta, c.metric, u) for c in found if c is not None)
        return out


def fast_sc_decode(tree: DecodeTree, channel_llr):
    """Returns ``(hard_out, steps)``."""
    return FastDecoder(tree).decode(channel_llr), tree.steps_per_iteration()


class FastFlipResult(NamedTuple):
    hard_out: np.ndarray
    iterations: int
    steps: int
    success: bool


def fast_flip_decode(tree: DecodeTree, channel_llr, t_max: int, mode: str = "TSCF",
                     omega: float = np.inf) -> FastFlipResult:
    """Node-level flip decoding.

    ``mode="SCF"`` ignores ``omega`` and tries candidates by ascending
    metric; ``mode="TSCF"`` keeps candidates with metric ``<= omega`` in
    order of appearance. ``success`` is the CRC verdict.
    """
    code = tree.code
    if code is None or code.crc_len < 1:
        raise ValueError("fast flip decoding needs a tree built from a code with a CRC")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    dec = FastDecoder(tree)
    spi = tree.steps_per_iteration()

    def ok(u):
        return crc_check(u[code.info_positions], code.crc_poly, code.crc_len)

    u_hat = dec.decode(channel_llr)
    if ok(u_hat):
        return FastFlipResult(u_hat, 1, spi, True)
    if mode == "SCF":
        plan = sorted(dec.candidates(np.inf), key=lambda c: c.metric)
    else:
        plan = dec.candidates(omega)
    it = 1
    for cand in plan[: max(t_max, 0)]:
        u_hat = dec.decode(channel_llr, cand)
        it += 1
        if ok(u_hat):
            return FastFlipResult(u_hat, it, it * spi, True)
    return FastFlipResult(u_hat, it, it * spi, False)
