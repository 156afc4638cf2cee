"""Architecture domain types: operations, blocks, search spaces.

Everything here is immutable bookkeeping. Nothing holds weights or tensor
data; a block is just a tally of the operations placed in one searched cell
plus the channel and spatial sizes around it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Optional

__all__ = [
    "KernelSpec",
    "PoolSpec",
    "StrideSpec",
    "OpKind",
    "Block",
    "Stage",
    "Architecture",
    "SearchSpaceDescriptor",
    "Violation",
    "ValidationResult",
    "ValidationError",
    "effective_kernel",
    "dominates",
    "validate",
]


def _check_positive(name: str, value: int) -> None:
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")


@dataclass(frozen=True, order=True)
class KernelSpec:
    k_w: int
    k_h: int
    k_c: int = 1
    dilation: int = 1

    def __post_init__(self):
        for name in ("k_w", "k_h", "k_c", "dilation"):
            _check_positive(name, getattr(self, name))

    @property
    def features(self) -> int:
        """Number of input entries one application of the kernel touches."""
        return self.k_w * self.k_h * self.k_c

    @property
    def effective_width(self) -> int:
        return self.k_w + (self.k_w - 1) * (self.dilation - 1)

    @property
    def effective_height(self) -> int:
        return self.k_h + (self.k_h - 1) * (self.dilation - 1)


@dataclass(frozen=True, order=True)
class PoolSpec:
    o_w: int
    o_h: int
    kind: str = "max"

    def __post_init__(self):
        _check_positive("o_w", self.o_w)
        _check_positive("o_h", self.o_h)
        if self.kind not in ("max", "avg"):
            raise ValueError(f"pool kind must be 'max' or 'avg', got {self.kind!r}")

    @property
    def features(self) -> int:
        return self.o_w * self.o_h


@dataclass(frozen=True, order=True)
class StrideSpec:
    s_1: int = 1
    s_2: int = 1
    s_3: int = 0

    def __post_init__(self):
        _check_positive("s_1", self.s_1)
        _check_positive("s_2", self.s_2)
        if not isinstance(self.s_3, int) or self.s_3 < 0:
            raise ValueError(f"s_3 must be a non-negative integer, got {self.s_3!r}")


UNIT_STRIDE = StrideSpec()

_TAGS = ("none", "skip", "conv", "pool", "other")


@dataclass(frozen=True)
class OpKind:
    """One element of a space's operation inventory.

    Build instances with the classmethods (``OpKind.conv(...)`` etc.) rather
    than the raw constructor.
    """

    tag: str
    kernel: Optional[KernelSpec] = None
    pool_spec: Optional[PoolSpec] = None
    stride: Optional[StrideSpec] = None
    label: Optional[str] = None

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise ValueError(f"unknown op tag {self.tag!r}")
        if self.tag == "conv" and self.kernel is None:
            raise ValueError("conv op needs a kernel")
        if self.tag == "pool" and self.pool_spec is None:
            raise ValueError("pool op needs a pool spec")
        if self.tag == "other" and not self.label:
            raise ValueError("other op needs a label")
        object.__setattr__(self, "_hash", hash((self.tag, self.kernel, self.pool_spec, self.stride, self.label)))

    def __hash__(self) -> int:
        return self._hash

    @classmethod
    def none(cls) -> "OpKind":
        return cls("none")

    @classmethod
    def skip(cls) -> "OpKind":
        return cls("skip")

    @classmethod
    def conv(cls, kernel: KernelSpec, stride: StrideSpec = UNIT_STRIDE) -> "OpKind":
        return cls("conv", kernel=kernel, stride=stride)

    @classmethod
    def pool(cls, pool: PoolSpec, stride: StrideSpec = UNIT_STRIDE) -> "OpKind":
        return cls("pool", pool_spec=pool, stride=stride)

    @classmethod
    def other(cls, label: str) -> "OpKind":
        return cls("other", label=label)

    def __str__(self) -> str:
        if self.tag == "conv":
            k = self.kernel
            return f"conv{k.k_w}x{k.k_h}" + (f"d{k.dilation}" if k.dilation != 1 else "")
        if self.tag == "pool":
            p, s = self.pool_spec, self.stride
            return f"{p.kind}pool{p.o_w}x{p.o_h}s{s.s_1}"
        if self.tag == "other":
            return f"other:{self.label}"
        return self.tag


def effective_kernel(kernel: KernelSpec) -> KernelSpec:
    """Fold dilation into the kernel footprint: k + (k-1)(d-1)."""
    if kernel.dilation == 1:
        return kernel
    return KernelSpec(kernel.effective_width, kernel.effective_height, kernel.k_c, 1)


def dominates(kernel: KernelSpec, pool: PoolSpec, pool_stride: StrideSpec) -> bool:
    """True iff the kernel covers the pooled footprint ceil(o/s) on both axes.

    Non-strict comparison; ``not dominates(...)`` is the suppressive case.
    The channel extent ``k_c`` plays no part.
    """
    if kernel.dilation != 1:
        raise ValueError("dominates() expects a dilation-free kernel; call effective_kernel first")
    need_w = -(-pool.o_w // pool_stride.s_1)
    need_h = -(-pool.o_h // pool_stride.s_2)
    return kernel.k_w >= need_w and kernel.k_h >= need_h


@dataclass(frozen=True, eq=True)
class Block:
    """Operation tally of one cell instance plus its size bookkeeping.

    ``slots`` is the number of operation positions the cell template
    declares (6 for a NATS-Bench topology cell); ``None`` skips that check.
    """

    op_counts: Mapping[OpKind, int]
    c_in: int
    c_out: int
    f_in: int
    f_out: int
    slots: Optional[int] = None
    cell: str = "normal"

    def __post_init__(self):
        # zero counts are dropped so structurally equal blocks compare equal;
        # an already-clean proxy is shared as is (cells repeated over a stage)
        oc = self.op_counts
        if not (isinstance(oc, MappingProxyType) and all(type(n) is int and n for n in oc.values())):
            counts = {op: int(n) for op, n in oc.items() if n != 0}
            object.__setattr__(self, "op_counts", MappingProxyType(counts))
        for name in ("c_in", "c_out", "f_in", "f_out"):
            _check_positive(name, getattr(self, name))

    def __eq__(self, other):
        if not isinstance(other, Block):
            return NotImplemented
        return (
            dict(self.op_counts) == dict(other.op_counts)
            and (self.c_in, self.c_out, self.f_in, self.f_out, self.slots, self.cell)
            == (other.c_in, other.c_out, other.f_in, other.f_out, other.slots, other.cell)
        )

    __hash__ = None

    def count(self, op: OpKind) -> int:
        return self.op_counts.get(op, 0)

    @property
    def total_ops(self) -> int:
        return sum(self.op_counts.values())


@dataclass(frozen=True)
class Stage:
    """One run of identical cells in the macro skeleton."""

    repeat: int
    c_out: int
    f_in: int
    f_out: int
    c_in: Optional[int] = None
    cell: str = "normal"

    def __post_init__(self):
        _check_positive("repeat", self.repeat)
        _check_positive("c_out", self.c_out)
        _check_positive("f_in", self.f_in)
        _check_positive("f_out", self.f_out)
        if self.c_in is not None:
            _check_positive("c_in", self.c_in)

    def block_geometry(self) -> list[tuple[int, int, int, int]]:
        """(c_in, c_out, f_in, f_out) for every cell in the stage.

        The first cell sees ``c_in``/``f_in``; later cells sit after it and
        see the stage output sizes.
        """
        c_in = self.c_in if self.c_in is not None else self.c_out
        out = [(c_in, self.c_out, self.f_in, self.f_out)]
        out += [(self.c_out, self.c_out, self.f_out, self.f_out)] * (self.repeat - 1)
        return out


def _sort_key_kernel(k: KernelSpec):
    return (-k.features, -k.k_w, -k.k_h)


def _sort_key_pool(item: tuple[PoolSpec, StrideSpec]):
    p, s = item
    # equal footprint: the smaller stride pools more aggressively, so it leads
    return (-p.features, -p.o_w, -p.o_h, s.s_1, s.s_2, p.kind)


@dataclass(frozen=True)
class SearchSpaceDescriptor:
    """Operation inventory and macro skeleton of a search space.

    ``ops`` maps encoding tokens to operation kinds; several tokens may map
    to the same kind (``sep_conv_5x5`` and ``dil_conv_3x3`` both fold to a
    plain 5x5 kernel). ``reduce_ops`` holds the token overrides applied
    inside reduction cells.
    """

    name: str
    ops: Mapping[str, OpKind]
    skeleton: tuple[Stage, ...]
    slots: Optional[int] = None
    encoding: str = "generic_json"
    reduce_ops: Mapping[str, OpKind] = field(default_factory=dict)
    sample_exclude: tuple[str, ...] = ()
    opt: frozenset = field(init=False)
    kernels: tuple[KernelSpec, ...] = field(init=False)
    pools: tuple[PoolSpec, ...] = field(init=False)
    pool_ops: tuple[tuple[PoolSpec, StrideSpec], ...] = field(init=False)
    has_skip: bool = field(init=False)
    has_pool: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "ops", MappingProxyType(dict(self.ops)))
        object.__setattr__(self, "reduce_ops", MappingProxyType(dict(self.reduce_ops)))
        object.__setattr__(self, "skeleton", tuple(self.skeleton))
        object.__setattr__(self, "sample_exclude", tuple(self.sample_exclude))
        if not self.ops:
            raise ValueError("search space needs at least one operation")
        if not self.skeleton:
            raise ValueError("search space needs a non-empty skeleton")
        opt = frozenset(self.ops.values()) | frozenset(self.reduce_ops.values())
        kernels = sorted({op.kernel for op in opt if op.tag == "conv"}, key=_sort_key_kernel)
        pool_ops = sorted({(op.pool_spec, op.stride) for op in opt if op.tag == "pool"}, key=_sort_key_pool)
        pools = []
        for p, _ in pool_ops:
            if p not in pools:
                pools.append(p)
        object.__setattr__(self, "opt", opt)
        object.__setattr__(self, "kernels", tuple(kernels))
        object.__setattr__(self, "pool_ops", tuple(pool_ops))
        object.__setattr__(self, "pools", tuple(pools))
        object.__setattr__(self, "has_skip", OpKind.skip() in opt)
        object.__setattr__(self, "has_pool", bool(pools))

    @property
    def largest_pool(self) -> Optional[tuple[PoolSpec, StrideSpec]]:
        """The leading pooling window and its stride, or None."""
        return self.pool_ops[0] if self.pool_ops else None

    @property
    def n_blocks(self) -> int:
        return sum(stage.repeat for stage in self.skeleton)

    def op_for(self, token: str, cell: str = "normal") -> OpKind:
        if cell == "reduce" and token in self.reduce_ops:
            return self.reduce_ops[token]
        return self.ops[token]

    def token_for(self, op: OpKind) -> str:
        """First token (in inventory order) that names ``op``."""
        for table in (self.ops, self.reduce_ops):
            for token, kind in table.items():
                if kind == op:
                    return token
        raise KeyError(f"operation {op} is not part of space {self.name!r}")

    def block_geometry(self) -> list[tuple[int, int, int, int, str]]:
        """(c_in, c_out, f_in, f_out, cell) for each block, in network order."""
        out = []
        for stage in self.skeleton:
            out += [g + (stage.cell,) for g in stage.block_geometry()]
        return out


@dataclass(frozen=True)
class Architecture:
    blocks: tuple[Block, ...]
    space: Optional[SearchSpaceDescriptor] = None
    encoding: str = ""

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))

    @property
    def n(self) -> int:
        return len(self.blocks)

    def structurally_equal(self, other: "Architecture") -> bool:
        return self.blocks == other.blocks


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    block: Optional[int] = None

    def __str__(self) -> str:
        where = f"block {self.block}: " if self.block is not None else ""
        return f"{where}{self.message}"


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


class ValidationError(ValueError):
    def __init__(self, violations: Iterable[Violation]):
        self.violations = tuple(violations)
        super().__init__("; ".join(str(v) for v in self.violations) or "invalid architecture")


def validate(arch: Architecture, space: Optional[SearchSpaceDescriptor] = None) -> ValidationResult:
    """Collect structural problems with ``arch``; never raises."""
    space = space if space is not None else arch.space
    found: list[Violation] = []
    if not arch.blocks:
        found.append(Violation("empty", "empty architecture"))
    checked: dict[int, int] = {}
    for i, block in enumerate(arch.blocks):
        # stage expansion shares Block objects and count tables across repeats
        if id(block) in checked:
            continue
        key = id(block.op_counts)
        total = checked.get(key)
        if total is None:
            total = 0
            for op, n in block.op_counts.items():
                total += n
                if n < 0:
                    found.append(Violation("negative-count", f"negative count {n} for {op}", i))
                if space is not None and op not in space.opt:
                    found.append(Violation("unknown-op", f"unknown operation {op}", i))
            checked[key] = total
        checked[id(block)] = total
        slots = block.slots if block.slots is not None else (space.slots if space is not None else None)
        if slots is not None and total != slots:
            found.append(
                Violation("slot-mismatch", f"{total} operations placed but cell template has {slots} slots", i)
            )
    return ValidationResult(tuple(found))

