"""Topology-only SED scoring.

Per block, operations fall into five buckets against the space's leading
pooling window O_1:

* kernels that cover ceil(o/s) on both axes ("dominating", count D)
* kernels that do not (count N)
* pools (count P)
* skip connections
* the rest (``none``, ``other``), which only enter the total T

and the score is::

    skip_sed  = sig(n_skip) * n_skip
    conv_sed  = sig(c_out) * D
    pool_sed  = D**2 + T**2 - (P + N)**2
    block     = sig(c_out) * f_in / f_out * pool_sed * sig(skip_sed * conv_sed)
    SED       = mean(block over blocks)
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional, Sequence, Union

from .arch import (
    Architecture,
    Block,
    OpKind,
    SearchSpaceDescriptor,
    ValidationError,
    dominates,
    effective_kernel,
    validate,
)

__all__ = [
    "sig",
    "skip_sed",
    "conv_sed",
    "pool_sed",
    "sed",
    "sed_value",
    "batch_score",
    "BlockScore",
    "SedBreakdown",
    "FALLBACK_CONSTANT",
]

FALLBACK_CONSTANT = 1.0

_DOM, _NONDOM, _POOL, _SKIP, _REST = range(5)


def sig(x: float) -> float:
    """Logistic sigmoid 1 / (1 + exp(-x)); saturates instead of overflowing."""
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def _classify(op: OpKind, space: SearchSpaceDescriptor) -> int:
    if op.tag == "skip":
        return _SKIP
    if op.tag == "pool":
        return _POOL
    if op.tag == "conv":
        lead = space.largest_pool
        if lead is None:
            return _DOM
        pool, stride = lead
        return _DOM if dominates(effective_kernel(op.kernel), pool, stride) else _NONDOM
    return _REST


def _bucket_table(space: SearchSpaceDescriptor) -> dict:
    # SearchSpaceDescriptor is frozen but unhashable; cache on the instance
    table = space.__dict__.get("_sed_buckets")
    if table is None:
        table = {op: _classify(op, space) for op in space.opt}
        object.__setattr__(space, "_sed_buckets", table)
    return table


def _tally(block: Block, space: SearchSpaceDescriptor, count_none: bool) -> list[int]:
    """[D, N, P, n_skip, T] for one block."""
    table = _bucket_table(space)
    d = nd = p = n_skip = total = 0
    for op, n in block.op_counts.items():
        bucket = table.get(op)
        if bucket is None:
            bucket = _classify(op, space)
        if bucket == _DOM:
            d += n
        elif bucket == _NONDOM:
            nd += n
        elif bucket == _POOL:
            p += n
        elif bucket == _SKIP:
            n_skip += n
        elif op.tag == "none" and not count_none:
            continue
        total += n
    return [d, nd, p, n_skip, total]


def skip_sed(block: Block) -> float:
    n = sum(c for op, c in block.op_counts.items() if op.tag == "skip")
    return sig(n) * n


def conv_sed(block: Block, space: SearchSpaceDescriptor) -> float:
    d = _tally(block, space, True)[0]
    return sig(block.c_out) * d


def pool_sed(block: Block, space: SearchSpaceDescriptor, count_none: bool = True) -> float:
    d, nd, p, _, total = _tally(block, space, count_none)
    return float(d * d + total * total - (p + nd) ** 2)


@dataclass(frozen=True)
class BlockScore:
    skip_sed: float
    conv_sed: float
    pool_sed: float
    ratio: float
    block_score: float


@dataclass(frozen=True)
class SedBreakdown:
    per_block: tuple[BlockScore, ...]
    sed: float

    def to_dict(self) -> dict:
        return {"sed": self.sed, "per_block": [asdict(b) for b in self.per_block]}


def _block_terms(block: Block, space: SearchSpaceDescriptor, count_none: bool) -> tuple[float, ...]:
    d, nd, p, n_skip, total = _tally(block, space, count_none)
    s_out = sig(block.c_out)
    skip_term = sig(n_skip) * n_skip if space.has_skip else FALLBACK_CONSTANT
    conv_term = s_out * d
    if space.has_pool:
        pool_term = float(d * d + total * total - (p + nd) ** 2)
    else:
        pool_term = FALLBACK_CONSTANT
    ratio = s_out * block.f_in / block.f_out
    score = ratio * pool_term * sig(skip_term * conv_term)
    return skip_term, conv_term, pool_term, ratio, score


def _check(arch: Architecture, space: SearchSpaceDescriptor) -> None:
    result = validate(arch, space)
    if not result.ok:
        raise ValidationError(result.violations)


def sed(
    arch: Architecture,
    space: Optional[SearchSpaceDescriptor] = None,
    *,
    count_none: bool = True,
    check: bool = True,
) -> SedBreakdown:
    """Score an architecture and return the per-block breakdown.

    ``count_none=False`` drops ``none`` placements from the total-operation
    term of pool_sed. Raises ValidationError for malformed architectures.
    """
    space = space if space is not None else arch.space
    if space is None:
        raise ValueError("no search space given and the architecture carries none")
    if not arch.blocks:
        _check(arch, space)
    if check:
        _check(arch, space)
    # cells repeat within a stage; reuse the score of an identical block object
    seen: dict[int, BlockScore] = {}
    scores = []
    for block in arch.blocks:
        bs = seen.get(id(block))
        if bs is None:
            bs = seen[id(block)] = BlockScore(*_block_terms(block, space, count_none))
        scores.append(bs)
    total = 0.0
    for bs in scores:
        total += bs.block_score
    return SedBreakdown(tuple(scores), total / len(scores))


def sed_value(arch: Architecture, space: SearchSpaceDescriptor, count_none: bool = True) -> float:
    """``sed(arch, space).sed`` without building the breakdown."""
    _check(arch, space)
    has_skip, has_pool = space.has_skip, space.has_pool
    seen: dict[int, float] = {}
    tallies: dict[int, list[int]] = {}
    total = 0.0
    for block in arch.blocks:
        v = seen.get(id(block))
        if v is None:
            t = tallies.get(id(block.op_counts))
            if t is None:
                t = tallies[id(block.op_counts)] = _tally(block, space, count_none)
            d, nd, p, n_skip, n_ops = t
            s_out = sig(block.c_out)
            skip_term = sig(n_skip) * n_skip if has_skip else FALLBACK_CONSTANT
            pool_term = float(d * d + n_ops * n_ops - (p + nd) ** 2) if has_pool else FALLBACK_CONSTANT
            v = s_out * block.f_in / block.f_out * pool_term * sig(skip_term * (s_out * d))
            seen[id(block)] = v
        total += v
    return total / len(arch.blocks)


ScoreItem = tuple[str, Union[float, ValidationError]]


def batch_score(
    archs: Sequence[Architecture],
    space: Optional[SearchSpaceDescriptor] = None,
    *,
    threads: Optional[int] = None,
    count_none: bool = True,
) -> list[ScoreItem]:
    """Score many architectures; returns ``(arch_id, SED)`` in input order.

    The id is the architecture's encoding, or its position when it has none.
    An invalid architecture yields its ValidationError in place of a score.
    ``threads`` defaults to the ``SED_THREADS`` environment variable, else 1.
    """
    if threads is None:
        threads = int(os.environ.get("SED_THREADS", "1") or 1)

    def one(item: tuple[int, Architecture]) -> ScoreItem:
        i, arch = item
        key = arch.encoding or str(i)
        try:
            return key, sed_value(arch, space if space is not None else arch.space, count_none)
        except ValidationError as exc:
            return key, exc

    items = list(enumerate(archs))
    if threads <= 1 or len(items) < 2:
        return [one(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, items, chunksize=max(1, len(items) // (threads * 4))))
