"""Decoding-tree classification and traversal schedules.

A :class:`DecodeTree` is the SC decoding tree pruned at special nodes.
Its leaves ("units") partition ``[0, N)`` and are decoded in one shot;
internal nodes are ``BRANCH`` nodes visited with the f/g/combine kernels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property, lru_cache

import numpy as np

from .construction import PolarCode


class Kind(IntEnum):
    RATE0 = 0
    RATE1 = 1
    REP = 2
    SPC = 3
    BRANCH = 4


# schedule opcodes, mirrored in _engine
OP_F, OP_G, OP_UNIT, OP_COMBINE = 0, 1, 2, 3


@dataclass
class Node:
    stage: int
    lo: int
    kind: Kind
    children: tuple = ()

    @property
    def size(self) -> int:
        return 1 << self.stage

    @property
    def span(self) -> tuple:
        return (self.lo, self.lo + self.size)


def node_kind(frozen) -> Kind:
    """Classify a frozen pattern (True = frozen) as a special node, if any.

    A two-bit ``[frozen, free]`` pattern is both Rep and SPC; Rep wins.
    """
    frozen = np.asarray(frozen, dtype=bool)
    n_free = int((~frozen).sum())
    if n_free == 0:
        return Kind.RATE0
    if n_free == frozen.size:
        return Kind.RATE1
    if n_free == 1 and not frozen[-1]:
        return Kind.REP
    if n_free == frozen.size - 1 and frozen[0]:
        return Kind.SPC
    return Kind.BRANCH


@dataclass
class DecodeTree:
    n: int
    frozen_mask: np.ndarray = field(repr=False)
    root: Node = field(repr=False)
    pruned: bool = True
    code: PolarCode | None = field(default=None, repr=False)

    @property
    def N(self) -> int:
        return 1 << self.n

    def nodes(self):
        """All nodes in pre-order (left first)."""
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            out.append(node)
            stack.extend(reversed(node.children))
        return out

    def units(self):
        """Pruned-tree leaves in decoding order."""
        return [nd for nd in self.nodes() if not nd.children]

    def count(self, kind: Kind) -> int:
        return sum(1 for nd in self.nodes() if nd.kind == kind)

    def steps_per_iteration(self) -> int:
        """Decoding steps for one pass over this tree.

        Two steps per branch node (its f and g phases) and one per special
        unit of size >= 2. A single-bit unit is resolved inside its parent's
        step, so the unpruned tree costs exactly ``2N - 2``.
        """
        steps = 0
        for nd in self.nodes():
            if nd.kind == Kind.BRANCH:
                steps += 2
            elif nd.stage > 0:
                steps += 1
        return steps

    def dump(self):
        return [{"stage": nd.stage, "span": list(nd.span), "kind": nd.kind.name}
                for nd in self.nodes()]

    def to_json(self) -> str:
        return json.dumps(self.dump())

    @cached_property
    def _schedule(self):
        return self._flatten()

    def schedule(self):
        """Flatten the traversal into arrays for the compiled engine.

        Returns ``(ops, unit_lo, unit_stage, unit_kind)``. Each row of ``ops``
        is ``(opcode, stage, unit_id, side)`` with ``side`` 0 for a left
        child (or the root) and 1 for a right child. The arrays are cached
        and read-only.
        """
        return self._schedule

    def _flatten(self):
        ops = []
        lo, stage, kind = [], [], []

        def walk(nd, side):
            if not nd.children:
                ops.append((OP_UNIT, nd.stage, len(lo), side))
                lo.append(nd.lo)
                stage.append(nd.stage)
                kind.append(int(nd.kind))
                return
            ops.append((OP_F, nd.stage, -1, side))
            walk(nd.children[0], 0)
            ops.append((OP_G, nd.stage, -1, side))
            walk(nd.children[1], 1)
            ops.append((OP_COMBINE, nd.stage, -1, side))

        walk(self.root, 0)
        out = (np.array(ops, dtype=np.int64).reshape(-1, 4),
               np.array(lo, dtype=np.int64),
               np.array(stage, dtype=np.int64),
               np.array(kind, dtype=np.int64))
        for arr in out:
            arr.setflags(write=False)
        return out


def _mask_of(code_or_mask) -> np.ndarray:
    if isinstance(code_or_mask, PolarCode):
        return code_or_mask.frozen_mask
    return np.asarray(code_or_mask, dtype=bool)


def _build(mask, lo, stage, prune, max_stage):
    size = 1 << stage
    kind = node_kind(mask[lo:lo + size])
    if stage == 0 or (prune and kind != Kind.BRANCH and stage <= max_stage):
        return Node(stage, lo, kind)
    half = size // 2
    return Node(stage, lo, Kind.BRANCH,
                (_build(mask, lo, stage - 1, prune, max_stage),
                 _build(mask, lo + half, stage - 1, prune, max_stage)))


def _make(code_or_mask, prune, max_node_size=None):
    mask = _mask_of(code_or_mask)
    if mask.ndim != 1 or mask.size < 2 or mask.size & (mask.size - 1):
        raise ValueError("frozen mask length must be a power of two >= 2")
    n = mask.size.bit_length() - 1
    if max_node_size is None:
        max_stage = n
    else:
        if max_node_size < 1 or max_node_size & (max_node_size - 1):
            raise ValueError("max_node_size must be a power of two")
        max_stage = int(max_node_size).bit_length() - 1
    code = code_or_mask if isinstance(code_or_mask, PolarCode) else None
    return DecodeTree(n, mask, _build(mask, 0, n, prune, max_stage), pruned=prune, code=code)


def classify_tree(code_or_mask, max_node_size: int | None = None) -> DecodeTree:
    """Pruned tree whose leaves are maximal Rate-0/Rate-1/Rep/SPC nodes.

    ``max_node_size`` caps the size of a special node; larger matching
    subtrees are split as branches. The default (no cap) gives the
    maximal classification used by the fast decoders.
    """
    return _make(code_or_mask, True, max_node_size)


def full_tree(code_or_mask) -> DecodeTree:
    """Unpruned tree: every internal node is a branch, every leaf one bit."""
    return _make(code_or_mask, False)


@lru_cache(maxsize=64)
def cached_tree(code: PolarCode, pruned: bool) -> DecodeTree:
    """Per-code tree cache (codes hash by identity)."""
    return _make(code, pruned)
