"""Random sampling, enumeration and SED-driven architecture selection."""

from __future__ import annotations

import itertools
import json
import math
import os
import time
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .arch import Architecture, SearchSpaceDescriptor
from .parse import (
    EncodingFormat,
    _tss_node_count,
    format_darts,
    parse,
    parse_darts,
    parse_generic,
    parse_tss,
    serialize,
    space_to_dict,
)
from .sed import SedBreakdown, batch_score, sed

__all__ = [
    "ConfigError",
    "SearchConfig",
    "SearchResult",
    "space_size",
    "enumerate_encodings",
    "sample_encodings",
    "sample_random",
    "build",
    "select",
    "search",
]


class ConfigError(ValueError):
    pass


def _sample_tokens(space: SearchSpaceDescriptor) -> list[str]:
    return [t for t in space.ops if t not in space.sample_exclude]


def _tss_string(tokens: tuple[str, ...]) -> str:
    parts, pos, j = [], 0, 1
    while pos < len(tokens):
        parts.append("|" + "|".join(f"{tokens[pos + k]}~{k}" for k in range(j)) + "|")
        pos += j
        j += 1
    return "+".join(parts)


def _need_slots(space: SearchSpaceDescriptor) -> int:
    if space.slots is None:
        raise ConfigError(f"space {space.name!r} declares no operation slots; cannot sample cells")
    return space.slots


def space_size(space: SearchSpaceDescriptor) -> int:
    """Number of distinct cell encodings under uniform per-slot sampling."""
    slots = _need_slots(space)
    n_ops = len(_sample_tokens(space))
    if space.encoding == EncodingFormat.TSS:
        return n_ops ** slots
    if space.encoding == EncodingFormat.DARTS:
        per_cell = 1
        for k in range(slots // 2):
            # two distinct inputs among k + 2 predecessors, ordered pair of ops
            per_cell *= math.comb(k + 2, 2) * n_ops * n_ops
        return per_cell * per_cell
    return n_ops ** slots


def enumerate_encodings(space: SearchSpaceDescriptor) -> Iterator[str]:
    """Every cell string of a topology-cell space, in product order."""
    if space.encoding != EncodingFormat.TSS:
        raise ConfigError("enumeration is only supported for tss_cell_string spaces")
    slots = _need_slots(space)
    if _tss_node_count(slots) is None:
        raise ConfigError(f"{slots} slots do not form a triangular cell")
    for combo in itertools.product(_sample_tokens(space), repeat=slots):
        yield _tss_string(combo)


def _darts_cell(rng: np.random.Generator, tokens: list[str], nodes: int) -> list[tuple[str, int]]:
    cell = []
    for k in range(nodes):
        inputs = sorted(rng.choice(k + 2, size=2, replace=False).tolist())
        for src in inputs:
            cell.append((tokens[int(rng.integers(len(tokens)))], int(src)))
    return cell


def _generic_cell(rng: np.random.Generator, tokens: list[str], slots: int) -> dict[str, int]:
    counts: dict[str, int] = {}
    for i in rng.integers(len(tokens), size=slots):
        counts[tokens[i]] = counts.get(tokens[i], 0) + 1
    return counts


def sample_encodings(space: SearchSpaceDescriptor, n: int, seed: int, dedup: bool = False) -> list[str]:
    """``n`` encodings drawn uniformly per operation slot (with replacement
    unless ``dedup``). Deterministic in ``seed``."""
    if not isinstance(n, int) or n < 1:
        raise ConfigError(f"number of samples must be a positive integer, got {n!r}")
    slots = _need_slots(space)
    tokens = _sample_tokens(space)
    if not tokens:
        raise ConfigError("no operations left to sample after sample_exclude")
    if dedup and n > space_size(space):
        raise ConfigError(f"cannot draw {n} distinct architectures from a space of {space_size(space)}")
    rng = np.random.default_rng(seed)
    if space.encoding == EncodingFormat.TSS:
        if _tss_node_count(slots) is None:
            raise ConfigError(f"{slots} slots do not form a triangular cell")
        m = len(tokens)
        if dedup:
            picks = rng.choice(m ** slots, size=n, replace=False)
            digits = (picks[:, None] // (m ** np.arange(slots - 1, -1, -1))[None, :]) % m
        else:
            digits = rng.integers(m, size=(n, slots))
        return [_tss_string(tuple(tokens[i] for i in row)) for row in digits]

    out: list[str] = []
    seen: set[str] = set()
    while len(out) < n:
        if space.encoding == EncodingFormat.DARTS:
            enc = format_darts(_darts_cell(rng, tokens, slots // 2), _darts_cell(rng, tokens, slots // 2))
        else:
            cell = _generic_cell(rng, tokens, slots)
            enc = json.dumps(cell, sort_keys=True)
        if dedup:
            if enc in seen:
                continue
            seen.add(enc)
        out.append(enc)
    return out


def _generic_arch(space: SearchSpaceDescriptor, cell_json: str) -> Architecture:
    counts = json.loads(cell_json)
    blocks = [{"counts": counts} for _ in range(space.n_blocks)]
    doc = {"schema": 1, "space": space_to_dict(space), "arch": {"encoding": cell_json, "blocks": blocks}}
    _, arch = parse_generic(doc)
    return Architecture(arch.blocks, space, cell_json)


def build(space: SearchSpaceDescriptor, encoding: str) -> Architecture:
    """Parse an encoding produced by ``sample_encodings`` (or a user one).

    For generic spaces the encoding is either a full document or a JSON
    object of per-cell counts replicated over every block.
    """
    if space.encoding == EncodingFormat.TSS:
        return parse_tss(encoding, space)
    if space.encoding == EncodingFormat.DARTS:
        return parse_darts(encoding, space)
    try:
        doc = json.loads(encoding)
    except json.JSONDecodeError:
        doc = None
    if isinstance(doc, dict) and "schema" not in doc:
        return _generic_arch(space, encoding)
    return parse(encoding, space)


def sample_random(space: SearchSpaceDescriptor, n: int, seed: int, dedup: bool = False) -> list[Architecture]:
    """Parsed architectures for ``sample_encodings(space, n, seed, dedup)``."""
    return [build(space, enc) for enc in sample_encodings(space, n, seed, dedup)]


@dataclass(frozen=True)
class SearchConfig:
    space: SearchSpaceDescriptor
    n_samples: int = 2000
    seed: int = 0
    output: Optional[str] = None
    dedup: bool = False
    threads: Optional[int] = None

    def __post_init__(self):
        if not isinstance(self.n_samples, int) or self.n_samples < 1:
            raise ConfigError(f"n_samples must be >= 1, got {self.n_samples!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")


@dataclass(frozen=True)
class SearchResult:
    best_arch: Architecture
    best_encoding: str
    best_sed: float
    breakdown: SedBreakdown
    elapsed: float
    n_scored: int

    def to_dict(self) -> dict:
        return {
            "best_encoding": self.best_encoding,
            "best_sed": self.best_sed,
            "elapsed_seconds": self.elapsed,
            "n_scored": self.n_scored,
            "breakdown": self.breakdown.to_dict(),
        }


def select(archs: list[Architecture], space: SearchSpaceDescriptor, threads: Optional[int] = None):
    """(argmax index, scores, scoring seconds); ties go to the smallest encoding."""
    start = time.perf_counter()
    scores = batch_score(archs, space, threads=threads)
    elapsed = time.perf_counter() - start
    for key, value in scores:
        if isinstance(value, Exception):
            raise value
    best = min(range(len(archs)), key=lambda i: (-scores[i][1], archs[i].encoding))
    return best, scores, elapsed


def search(config: SearchConfig) -> SearchResult:
    """Sample ``n_samples`` architectures and keep the one with the highest SED.

    ``elapsed`` covers scoring only. When ``config.output`` is set the
    selected encoding, its breakdown and the generic-JSON form are written
    there.
    """
    space = config.space
    archs = sample_random(space, config.n_samples, config.seed, config.dedup)
    best, scores, elapsed = select(archs, space, config.threads)
    arch = archs[best]
    result = SearchResult(arch, arch.encoding, scores[best][1], sed(arch, space), elapsed, len(archs))
    if config.output:
        doc = result.to_dict()
        doc["seed"] = config.seed
        doc["n_samples"] = config.n_samples
        doc["architecture"] = json.loads(serialize(arch, space))
        parent = os.path.dirname(os.path.abspath(config.output))
        os.makedirs(parent, exist_ok=True)
        with open(config.output, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    return result
