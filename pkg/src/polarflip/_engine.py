"""Compiled decoding kernels.

Everything here works on flat arrays produced by
:meth:`polarflip.tree.DecodeTree.schedule`. LLR storage for stage ``S``
lives at ``alpha[2**S : 2**(S+1)]``; the same offsets are used for the
left/right partial-sum rows ``beta[0]`` and ``beta[1]``. The root's
partial sums (the codeword estimate) end up in ``beta[0, N:2N]``.

Flip requests are per-unit: ``flip_a[u] >= 0`` marks unit ``u`` for
inversion at node-local index ``flip_a[u]`` (and ``flip_b[u]`` if set).
For a Rep unit any ``flip_a[u] >= 0`` inverts the whole node.
"""

import numpy as np
from numba import njit

RATE0, RATE1, REP, SPC = 0, 1, 2, 3
OP_F, OP_G, OP_UNIT, OP_COMBINE = 0, 1, 2, 3

# candidate ordering
ORDER_APPEARANCE, ORDER_METRIC = 0, 1

# batch decoder modes
MODE_SC, MODE_FLIP, MODE_ORACLE = 0, 1, 2


@njit(cache=True)
def f_min(a, b):
    m = min(abs(a), abs(b))
    return m if (a < 0) == (b < 0) else -m


@njit(cache=True)
def run_pass(ops, unit_lo, unit_stage, unit_kind, llr, alpha, beta, rec,
             flip_a, flip_b, oracle_u, use_oracle):
    """One SC pass over the schedule. Returns the genie-forced leaf or -1.

    ``beta`` has shape ``(2, 2N)``: row 0 holds left-child partial sums,
    row 1 right-child ones.
    """
    N = llr.shape[0]
    for i in range(N):
        alpha[N + i] = llr[i]
    forced = -1
    for k in range(ops.shape[0]):
        op = ops[k, 0]
        S = ops[k, 1]
        side = ops[k, 3]
        if op == OP_F:
            h = 1 << (S - 1)
            for i in range(h):
                a = alpha[2 * h + i]
                b = alpha[3 * h + i]
                m = min(abs(a), abs(b))
                alpha[h + i] = m if (a < 0) == (b < 0) else -m
        elif op == OP_G:
            h = 1 << (S - 1)
            for i in range(h):
                a = alpha[2 * h + i]
                if beta[0, h + i]:
                    a = -a
                alpha[h + i] = alpha[3 * h + i] + a
        elif op == OP_COMBINE:
            h = 1 << (S - 1)
            for i in range(h):
                beta[side, 2 * h + i] = beta[0, h + i] ^ beta[1, h + i]
                beta[side, 3 * h + i] = beta[1, h + i]
        else:
            u = ops[k, 2]
            nv = 1 << S
            lo = unit_lo[u]
            kind = unit_kind[u]
            for i in range(nv):
                rec[lo + i] = alpha[nv + i]
            if kind == RATE0:
                for i in range(nv):
                    beta[side, nv + i] = 0
            elif kind == RATE1:
                for i in range(nv):
                    beta[side, nv + i] = alpha[nv + i] < 0
                if nv == 1 and use_oracle and forced < 0 and beta[side, 1] != oracle_u[lo]:
                    beta[side, 1] = oracle_u[lo]
                    forced = lo
                if flip_a[u] >= 0:
                    beta[side, nv + flip_a[u]] ^= 1
                    if flip_b[u] >= 0:
                        beta[side, nv + flip_b[u]] ^= 1
            elif kind == REP:
                s = 0.0
                for i in range(nv):
                    s += alpha[nv + i]
                bit = 1 if s < 0 else 0
                if flip_a[u] >= 0:
                    bit ^= 1
                for i in range(nv):
                    beta[side, nv + i] = bit
            else:
                parity = 0
                imin = 0
                amin = np.inf
                for i in range(nv):
                    a = alpha[nv + i]
                    b = 1 if a < 0 else 0
                    beta[side, nv + i] = b
                    parity ^= b
                    if abs(a) < amin:
                        amin = abs(a)
                        imin = i
                if flip_a[u] >= 0:
                    # candidates are defined on the hard decisions and
                    # already satisfy the parity constraint
                    beta[side, nv + flip_a[u]] ^= 1
                    if flip_b[u] >= 0:
                        beta[side, nv + flip_b[u]] ^= 1
                elif parity:
                    beta[side, nv + imin] ^= 1
    return forced


@njit(cache=True)
def polar_xform(x, out):
    N = x.shape[0]
    for i in range(N):
        out[i] = x[i]
    h = 1
    while h < N:
        for blk in range(0, N, 2 * h):
            for i in range(blk, blk + h):
                out[i] ^= out[i + h]
        h *= 2


@njit(cache=True)
def crc_passes(u_hat, info_pos, info_len, crc_len, poly):
    if crc_len == 0:
        return True
    mask = (np.int64(1) << crc_len) - 1
    top = np.int64(1) << (crc_len - 1)
    reg = np.int64(0)
    for k in range(info_len):
        fb = ((reg & top) != 0) ^ (u_hat[info_pos[k]] != 0)
        reg = (reg << 1) & mask
        if fb:
            reg ^= poly
    for k in range(crc_len):
        bit = (reg >> (crc_len - 1 - k)) & 1
        if bit != u_hat[info_pos[info_len + k]]:
            return False
    return True


@njit(cache=True)
def _three_smallest(mag, base, nv):
    i1 = -1
    i2 = -1
    i3 = -1
    for i in range(nv):
        m = mag[base + i]
        if i1 < 0 or m < mag[base + i1]:
            i3 = i2
            i2 = i1
            i1 = i
        elif i2 < 0 or m < mag[base + i2]:
            i3 = i2
            i2 = i
        elif i3 < 0 or m < mag[base + i3]:
            i3 = i
    return i1, i2, i3


@njit(cache=True)
def gather_candidates(unit_lo, unit_stage, unit_kind, rec, eligible, omega,
                      order, t_max, cand_unit, cand_a, cand_b, cand_metric):
    """Build the flip plan from the top-node LLRs of the failed first pass.

    Returns the number of candidates kept (at most ``t_max``).
    """
    n_units = unit_lo.shape[0]
    mag = np.abs(rec)
    cnt = 0
    for u in range(n_units):
        if not eligible[u]:
            continue
        kind = unit_kind[u]
        lo = unit_lo[u]
        nv = 1 << unit_stage[u]
        if kind == RATE1:
            imin = 0
            amin = abs(rec[lo])
            for i in range(1, nv):
                if abs(rec[lo + i]) < amin:
                    amin = abs(rec[lo + i])
                    imin = i
            if amin <= omega:
                cand_unit[cnt] = u
                cand_a[cnt] = imin
                cand_b[cnt] = -1
                cand_metric[cnt] = amin
                cnt += 1
        elif kind == REP:
            s = 0.0
            for i in range(nv):
                s += rec[lo + i]
            if abs(s) <= omega:
                cand_unit[cnt] = u
                cand_a[cnt] = 0
                cand_b[cnt] = -1
                cand_metric[cnt] = abs(s)
                cnt += 1
        elif kind == SPC and nv >= 4:
            parity = 0
            for i in range(nv):
                if rec[lo + i] < 0:
                    parity ^= 1
            i1, i2, i3 = _three_smallest(mag, lo, nv)
            for second in (i2, i3):
                if parity:
                    m = mag[lo + second]
                    a = second
                    b = -1
                else:
                    m = mag[lo + i1] + mag[lo + second]
                    a = i1
                    b = second
                if m <= omega:
                    cand_unit[cnt] = u
                    cand_a[cnt] = a
                    cand_b[cnt] = b
                    cand_metric[cnt] = m
                    cnt += 1
    if order == ORDER_METRIC and cnt > 1:
        perm = np.argsort(cand_metric[:cnt], kind="mergesort")
        cu = cand_unit[:cnt][perm]
        ca = cand_a[:cnt][perm]
        cb = cand_b[:cnt][perm]
        cm = cand_metric[:cnt][perm]
        cand_unit[:cnt] = cu
        cand_a[:cnt] = ca
        cand_b[:cnt] = cb
        cand_metric[:cnt] = cm
    return min(cnt, t_max)


class Workspace:
    """Scratch buffers for one decoder instance (not shareable mid-decode)."""

    def __init__(self, tree):
        self.ops, self.unit_lo, self.unit_stage, self.unit_kind = tree.schedule()
        N = tree.N
        self.tree = tree
        n_units = self.unit_lo.shape[0]
        self.N = N
        self.alpha = np.zeros(2 * N)
        self.beta = np.zeros((2, 2 * N), dtype=np.uint8)
        self.rec = np.zeros(N)
        self.flip_a = np.full(n_units, -1, dtype=np.int64)
        self.flip_b = np.full(n_units, -1, dtype=np.int64)
        self.u_hat = np.zeros(N, dtype=np.uint8)
        self.no_oracle = np.zeros(N, dtype=np.uint8)
        cap = 2 * n_units + 1
        self.cand_unit = np.zeros(cap, dtype=np.int64)
        self.cand_a = np.zeros(cap, dtype=np.int64)
        self.cand_b = np.zeros(cap, dtype=np.int64)
        self.cand_metric = np.zeros(cap)

    def decode(self, llr, oracle_u=None):
        use = oracle_u is not None
        forced = run_pass(self.ops, self.unit_lo, self.unit_stage, self.unit_kind,
                          np.ascontiguousarray(llr, dtype=np.float64), self.alpha,
                          self.beta, self.rec, self.flip_a, self.flip_b,
                          self.no_oracle if not use else np.asarray(oracle_u, dtype=np.uint8),
                          use)
        polar_xform(self.beta[0, self.N:], self.u_hat)
        return forced


@njit(cache=True)
def flip_decode(ops, unit_lo, unit_stage, unit_kind, llr, alpha, beta, rec,
                flip_a, flip_b, u_hat, no_oracle, info_pos, info_len, crc_len, poly,
                eligible, omega, order, t_max, cand_unit, cand_a, cand_b, cand_metric):
    """CRC-aided flip decoding. Returns ``(iterations, crc_passed)``.

    ``u_hat`` holds the final leaf estimate; ``rec`` keeps the top-node LLRs
    of the first pass.
    """
    N = llr.shape[0]
    run_pass(ops, unit_lo, unit_stage, unit_kind, llr, alpha, beta, rec,
             flip_a, flip_b, no_oracle, False)
    polar_xform(beta[0, N:], u_hat)
    if crc_passes(u_hat, info_pos, info_len, crc_len, poly):
        return 1, True
    if t_max <= 0:
        return 1, False
    n_cand = gather_candidates(unit_lo, unit_stage, unit_kind, rec, eligible, omega,
                               order, t_max, cand_unit, cand_a, cand_b, cand_metric)
    first = rec.copy()
    it = 1
    ok = False
    for c in range(n_cand):
        u = cand_unit[c]
        flip_a[u] = cand_a[c]
        flip_b[u] = cand_b[c]
        run_pass(ops, unit_lo, unit_stage, unit_kind, llr, alpha, beta, rec,
                 flip_a, flip_b, no_oracle, False)
        flip_a[u] = -1
        flip_b[u] = -1
        polar_xform(beta[0, N:], u_hat)
        it += 1
        if crc_passes(u_hat, info_pos, info_len, crc_len, poly):
            ok = True
            break
    rec[:] = first
    return it, ok


@njit(cache=True)
def decode_batch(mode, ops, unit_lo, unit_stage, unit_kind, llrs, u_true, info_pos,
                 info_len, crc_len, poly, eligible, omega, order, t_max, stop_errors,
                 iterations, crc_ok, payload_ok):
    """Decode frames in order until ``stop_errors`` payload errors (0 = never).

    Returns the number of frames processed; per-frame results are written to
    ``iterations``, ``crc_ok`` and ``payload_ok``.
    """
    B, N = llrs.shape
    n_units = unit_lo.shape[0]
    alpha = np.zeros(2 * N)
    beta = np.zeros((2, 2 * N), dtype=np.uint8)
    rec = np.zeros(N)
    flip_a = np.full(n_units, -1, dtype=np.int64)
    flip_b = np.full(n_units, -1, dtype=np.int64)
    u_hat = np.zeros(N, dtype=np.uint8)
    no_oracle = np.zeros(N, dtype=np.uint8)
    cap = 2 * n_units + 1
    cand_unit = np.zeros(cap, dtype=np.int64)
    cand_a = np.zeros(cap, dtype=np.int64)
    cand_b = np.zeros(cap, dtype=np.int64)
    cand_metric = np.zeros(cap)
    errors = 0
    for f in range(B):
        llr = llrs[f]
        if mode == MODE_FLIP:
            it, ok = flip_decode(ops, unit_lo, unit_stage, unit_kind, llr, alpha, beta,
                                 rec, flip_a, flip_b, u_hat, no_oracle, info_pos,
                                 info_len, crc_len, poly, eligible, omega, order, t_max,
                                 cand_unit, cand_a, cand_b, cand_metric)
        else:
            run_pass(ops, unit_lo, unit_stage, unit_kind, llr, alpha, beta, rec,
                     flip_a, flip_b, u_true[f], mode == MODE_ORACLE)
            polar_xform(beta[0, N:], u_hat)
            it = 1
            ok = crc_passes(u_hat, info_pos, info_len, crc_len, poly)
        iterations[f] = it
        crc_ok[f] = ok
        good = True
        for k in range(info_len):
            p = info_pos[k]
            if u_hat[p] != u_true[f, p]:
                good = False
                break
        payload_ok[f] = good
        if not good:
            errors += 1
            if stop_errors > 0 and errors >= stop_errors:
                return f + 1
    return B
