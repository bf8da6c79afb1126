"""Polar code construction, encoding and CRC handling."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .sequence import N_MAX, sequence_for

DEFAULT_CRC_POLY = 0x1021
DEFAULT_CRC_LEN = 16


@dataclass(frozen=True, eq=False)
class PolarCode:
    """Static description of a (CRC-aided) polar code.

    ``K`` counts every non-frozen position, CRC bits included, so the
    payload carries ``K - crc_len`` bits. Payload bits followed by CRC bits
    fill the non-frozen positions in ascending index order.
    """

    n: int
    K: int
    frozen_mask: np.ndarray = field(repr=False)
    crc_len: int = 0
    crc_poly: int = DEFAULT_CRC_POLY

    def __post_init__(self):
        mask = np.asarray(self.frozen_mask, dtype=bool).copy()
        mask.setflags(write=False)
        object.__setattr__(self, "frozen_mask", mask)
        if mask.shape != (1 << self.n,):
            raise ValueError(f"frozen_mask must have length {1 << self.n}")
        if int((~mask).sum()) != self.K:
            raise ValueError("number of non-frozen positions differs from K")
        if self.crc_len < 0 or (self.K > 0 and self.crc_len >= self.K):
            raise ValueError(f"crc_len must satisfy 0 <= crc_len < K, got {self.crc_len}")
        if self.crc_len > 63:
            raise ValueError("crc_len above 63 is not supported")

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def info_len(self) -> int:
        return self.K - self.crc_len

    @property
    def rate(self) -> float:
        return self.K / self.N

    @cached_property
    def info_positions(self) -> np.ndarray:
        pos = np.flatnonzero(~self.frozen_mask)
        pos.setflags(write=False)
        return pos

    @cached_property
    def frozen_positions(self) -> np.ndarray:
        pos = np.flatnonzero(self.frozen_mask)
        pos.setflags(write=False)
        return pos

    @classmethod
    def from_frozen_mask(cls, frozen_mask, crc_len=0, crc_poly=DEFAULT_CRC_POLY):
        mask = np.asarray(frozen_mask, dtype=bool)
        N = mask.size
        if N < 2 or N & (N - 1):
            raise ValueError(f"mask length must be a power of two >= 2, got {N}")
        return cls(N.bit_length() - 1, int((~mask).sum()), mask, crc_len, crc_poly)

    def descriptor(self) -> dict:
        """JSON-ready summary; the mask is packed MSB-first into hex."""
        packed = np.packbits(self.frozen_mask.astype(np.uint8))
        return {
            "n": self.n,
            "K": self.K,
            "crc_len": self.crc_len,
            "crc_poly_hex": f"0x{self.crc_poly:x}",
            "frozen_mask_hex": packed.tobytes().hex(),
        }

    def to_json(self) -> str:
        return json.dumps(self.descriptor())

    @classmethod
    def from_descriptor(cls, desc: dict) -> "PolarCode":
        N = 1 << int(desc["n"])
        raw = np.frombuffer(bytes.fromhex(desc["frozen_mask_hex"]), dtype=np.uint8)
        mask = np.unpackbits(raw)[:N].astype(bool)
        code = cls(int(desc["n"]), int(desc["K"]), mask, int(desc["crc_len"]),
                   int(desc["crc_poly_hex"], 16))
        return code

    @classmethod
    def from_json(cls, text: str) -> "PolarCode":
        return cls.from_descriptor(json.loads(text))


def build_code(n, K, crc_len=DEFAULT_CRC_LEN, crc_poly=DEFAULT_CRC_POLY) -> PolarCode:
    """Build a polar code of length ``2**n`` from the 5G reliability sequence.

    The ``2**n - K`` least reliable bit-channels are frozen.
    """
    if not 2 <= n or (1 << n) > N_MAX:
        raise ValueError(f"n must lie in [2, {N_MAX.bit_length() - 1}], got {n}")
    N = 1 << n
    if not 0 < K <= N:
        raise ValueError(f"K must lie in (0, {N}], got {K}")
    if crc_len >= K:
        raise ValueError(f"crc_len ({crc_len}) must be smaller than K ({K})")
    mask = np.zeros(N, dtype=bool)
    mask[sequence_for(N)[: N - K]] = True
    return PolarCode(n, K, mask, crc_len, crc_poly)


def polar_transform(u) -> np.ndarray:
    """Multiply by the n-fold Kronecker power of [[1, 0], [1, 1]] over GF(2).

    Works on the last axis, so a batch of shape ``(B, N)`` is transformed
    row by row. The transform is its own inverse.
    """
    x = np.array(u, dtype=np.uint8, copy=True)
    N = x.shape[-1]
    if N & (N - 1):
        raise ValueError("length must be a power of two")
    lead = x.shape[:-1]
    h = 1
    while h < N:
        v = x.reshape(lead + (N // (2 * h), 2, h))
        v[..., 0, :] ^= v[..., 1, :]
        h *= 2
    return x


def crc_compute(bits, poly=DEFAULT_CRC_POLY, crc_len=DEFAULT_CRC_LEN) -> np.ndarray:
    """CRC remainder of ``bits`` (MSB first, zero initial register, no final XOR)."""
    if crc_len < 1:
        raise ValueError("crc_len must be >= 1")
    mask = (1 << crc_len) - 1
    top = 1 << (crc_len - 1)
    reg = 0
    for b in np.asarray(bits, dtype=np.uint8).ravel():
        feedback = bool(reg & top) ^ bool(b)
        reg = (reg << 1) & mask
        if feedback:
            reg ^= poly
    return np.array([(reg >> (crc_len - 1 - k)) & 1 for k in range(crc_len)], dtype=np.uint8)


def crc_check(bits, poly=DEFAULT_CRC_POLY, crc_len=DEFAULT_CRC_LEN) -> bool:
    """True when the trailing ``crc_len`` bits match the CRC of the rest."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if bits.size < crc_len:
        raise ValueError("input shorter than the CRC")
    return bool(np.array_equal(crc_compute(bits[:-crc_len], poly, crc_len), bits[-crc_len:]))


def crc_matrix(info_len, poly=DEFAULT_CRC_POLY, crc_len=DEFAULT_CRC_LEN) -> np.ndarray:
    """Row ``i`` is the CRC of the ``i``-th unit payload.

    With a zero initial register the CRC is linear, so ``payload @ M % 2``
    gives the CRC of a whole batch at once.
    """
    M = np.zeros((info_len, crc_len), dtype=np.uint8)
    e = np.zeros(info_len, dtype=np.uint8)
    for i in range(info_len):
        e[i] = 1
        M[i] = crc_compute(e, poly, crc_len)
        e[i] = 0
    return M


def attach_crc(code: PolarCode, payload) -> np.ndarray:
    payload = np.asarray(payload, dtype=np.uint8)
    if code.crc_len == 0:
        return payload.copy()
    return np.concatenate([payload, crc_compute(payload, code.crc_poly, code.crc_len)])


def place_bits(code: PolarCode, payload) -> np.ndarray:
    """Leaf vector u: payload followed by its CRC at the non-frozen positions."""
    payload = np.asarray(payload, dtype=np.uint8).ravel()
    if payload.size != code.info_len:
        raise ValueError(f"payload must have {code.info_len} bits, got {payload.size}")
    u = np.zeros(code.N, dtype=np.uint8)
    u[code.info_positions] = attach_crc(code, payload)
    return u


def encode(code: PolarCode, payload) -> np.ndarray:
    """Encode ``payload`` into a length-N codeword."""
    return polar_transform(place_bits(code, payload))


def encode_batch(code: PolarCode, payloads, crc_mat=None):
    """Vectorised encoder for a ``(B, info_len)`` payload batch.

    Returns ``(u, x)``, the leaf vectors and the codewords.
    """
    payloads = np.asarray(payloads, dtype=np.uint8)
    if payloads.ndim != 2 or payloads.shape[1] != code.info_len:
        raise ValueError(f"payload batch must have shape (B, {code.info_len})")
    u = np.zeros((payloads.shape[0], code.N), dtype=np.uint8)
    if code.crc_len:
        if crc_mat is None:
            crc_mat = crc_matrix(code.info_len, code.crc_poly, code.crc_len)
        crc = (payloads.astype(np.int32) @ crc_mat.astype(np.int32)) & 1
        u[:, code.info_positions] = np.concatenate([payloads, crc.astype(np.uint8)], axis=1)
    else:
        u[:, code.info_positions] = payloads
    return u, polar_transform(u)
