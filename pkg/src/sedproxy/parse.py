"""Parsers for architecture encodings and search-space documents.

Three encodings are understood:

``tss_cell_string``
    NATS-Bench topology cells, ``|op~0|+|op~0|op~1|+|op~0|op~1|op~2|``.
``darts_genotype``
    DARTS ``Genotype(normal=[(op, node), ...], ...)`` text, or the same
    structure as JSON.
``generic_json``
    A self-contained document carrying both the space and per-block counts
    (schema in the README).

Every error raised here is a ``ParseError`` whose ``position`` is either a
byte offset into the input (string grammars) or a JSON path.
"""

from __future__ import annotations

import ast
import json
import os
from importlib import resources
from types import MappingProxyType
from typing import Any, Mapping, Optional, Union

from .arch import (
    Architecture,
    Block,
    KernelSpec,
    OpKind,
    PoolSpec,
    SearchSpaceDescriptor,
    Stage,
    StrideSpec,
    ValidationError,
    effective_kernel,
    validate,
)

__all__ = [
    "ParseError",
    "SchemaError",
    "EncodingFormat",
    "SCHEMA_VERSION",
    "load_space",
    "space_from_dict",
    "space_to_dict",
    "builtin_spaces",
    "parse",
    "parse_tss",
    "parse_darts",
    "parse_generic",
    "serialize",
    "format_darts",
]

SCHEMA_VERSION = 1


class EncodingFormat:
    TSS = "tss_cell_string"
    DARTS = "darts_genotype"
    GENERIC = "generic_json"
    ALL = (TSS, DARTS, GENERIC)


class ParseError(ValueError):
    """Malformed encoding. ``position`` is a byte offset or a JSON path."""

    def __init__(self, message: str, position: Union[int, str, None] = None):
        self.message = message
        self.position = position
        where = f" at {position}" if isinstance(position, str) else f" at offset {position}"
        super().__init__(message + ("" if position is None else where))


class SchemaError(ParseError):
    pass


# ---------------------------------------------------------------------------
# space documents


def _req(obj: Mapping, key: str, path: str) -> Any:
    if not isinstance(obj, Mapping):
        raise SchemaError("expected an object", path)
    if key not in obj:
        raise SchemaError(f"missing required field {key!r}", f"{path}.{key}")
    return obj[key]


def _pos_int(value: Any, path: str, allow_zero: bool = False) -> int:
    lo = 0 if allow_zero else 1
    if not isinstance(value, int) or isinstance(value, bool) or value < lo:
        raise SchemaError(f"expected an integer >= {lo}, got {value!r}", path)
    return value


def _int_pair(value: Any, path: str) -> tuple[int, int]:
    if isinstance(value, int) and not isinstance(value, bool):
        value = [value, value]
    if not isinstance(value, list) or len(value) not in (2, 3):
        raise SchemaError("expected [w, h] integers", path)
    return _pos_int(value[0], f"{path}[0]"), _pos_int(value[1], f"{path}[1]")


def _op_from_dict(d: Any, path: str) -> OpKind:
    kind = _req(d, "type", path)
    if kind == "none":
        return OpKind.none()
    if kind == "skip":
        return OpKind.skip()
    if kind == "other":
        return OpKind.other(str(d.get("label") or path.rsplit(".", 1)[-1]))
    stride = StrideSpec(*_int_pair(d.get("stride", [1, 1]), f"{path}.stride"))
    if kind == "conv":
        k_w, k_h = _int_pair(_req(d, "kernel", path), f"{path}.kernel")
        k_c = _pos_int(d.get("channels", 1), f"{path}.channels")
        dil = _pos_int(d.get("dilation", 1), f"{path}.dilation")
        return OpKind.conv(effective_kernel(KernelSpec(k_w, k_h, k_c, dil)), stride)
    if kind == "pool":
        o_w, o_h = _int_pair(_req(d, "size", path), f"{path}.size")
        pk = d.get("kind", "max")
        if pk not in ("max", "avg"):
            raise SchemaError(f"pool kind must be 'max' or 'avg', got {pk!r}", f"{path}.kind")
        return OpKind.pool(PoolSpec(o_w, o_h, pk), stride)
    raise SchemaError(f"unknown op type {kind!r}", f"{path}.type")


def _op_to_dict(op: OpKind) -> dict:
    if op.tag in ("none", "skip"):
        return {"type": op.tag}
    if op.tag == "other":
        return {"type": "other", "label": op.label}
    s = [op.stride.s_1, op.stride.s_2]
    if op.tag == "conv":
        k = op.kernel
        return {"type": "conv", "kernel": [k.k_w, k.k_h], "channels": k.k_c, "dilation": k.dilation, "stride": s}
    p = op.pool_spec
    return {"type": "pool", "size": [p.o_w, p.o_h], "kind": p.kind, "stride": s}


def space_from_dict(doc: Mapping, path: str = "$") -> SearchSpaceDescriptor:
    """Build a descriptor from its JSON form; raises SchemaError with a path."""
    if not isinstance(doc, Mapping):
        raise SchemaError("expected an object", path)
    version = doc.get("schema", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version {version!r}", f"{path}.schema")
    ops_doc = _req(doc, "ops", path)
    if not isinstance(ops_doc, Mapping) or not ops_doc:
        raise SchemaError("expected a non-empty object of operations", f"{path}.ops")
    ops = {str(t): _op_from_dict(d, f"{path}.ops.{t}") for t, d in ops_doc.items()}
    reduce_doc = doc.get("reduce_ops", {})
    if not isinstance(reduce_doc, Mapping):
        raise SchemaError("expected an object", f"{path}.reduce_ops")
    reduce_ops = {str(t): _op_from_dict(d, f"{path}.reduce_ops.{t}") for t, d in reduce_doc.items()}
    for t in reduce_ops:
        if t not in ops:
            raise SchemaError(f"reduce override {t!r} has no base operation", f"{path}.reduce_ops.{t}")
    sk_doc = _req(doc, "skeleton", path)
    if not isinstance(sk_doc, list) or not sk_doc:
        raise SchemaError("expected a non-empty list of stages", f"{path}.skeleton")
    stages = []
    for i, st in enumerate(sk_doc):
        p = f"{path}.skeleton[{i}]"
        c_in = st.get("c_in") if isinstance(st, Mapping) else None
        cell = st.get("cell", "normal") if isinstance(st, Mapping) else "normal"
        if cell not in ("normal", "reduce"):
            raise SchemaError(f"cell must be 'normal' or 'reduce', got {cell!r}", f"{p}.cell")
        stages.append(
            Stage(
                repeat=_pos_int(st.get("repeat", 1) if isinstance(st, Mapping) else None, f"{p}.repeat"),
                c_out=_pos_int(_req(st, "c_out", p), f"{p}.c_out"),
                f_in=_pos_int(_req(st, "f_in", p), f"{p}.f_in"),
                f_out=_pos_int(_req(st, "f_out", p), f"{p}.f_out"),
                c_in=None if c_in is None else _pos_int(c_in, f"{p}.c_in"),
                cell=cell,
            )
        )
    slots = doc.get("slots")
    if slots is not None:
        slots = _pos_int(slots, f"{path}.slots")
    encoding = doc.get("encoding", EncodingFormat.GENERIC)
    if encoding not in EncodingFormat.ALL:
        raise SchemaError(f"unknown encoding {encoding!r}", f"{path}.encoding")
    exclude = doc.get("sample_exclude", [])
    if not isinstance(exclude, list) or any(not isinstance(t, str) or t not in ops for t in exclude):
        raise SchemaError("sample_exclude must list known operation tokens", f"{path}.sample_exclude")
    return SearchSpaceDescriptor(
        name=str(doc.get("name", "custom")),
        ops=ops,
        skeleton=tuple(stages),
        slots=slots,
        encoding=encoding,
        reduce_ops=reduce_ops,
        sample_exclude=tuple(exclude),
    )


def space_to_dict(space: SearchSpaceDescriptor) -> dict:
    out: dict = {
        "schema": SCHEMA_VERSION,
        "name": space.name,
        "encoding": space.encoding,
        "slots": space.slots,
        "ops": {t: _op_to_dict(op) for t, op in space.ops.items()},
    }
    if space.reduce_ops:
        out["reduce_ops"] = {t: _op_to_dict(op) for t, op in space.reduce_ops.items()}
    if space.sample_exclude:
        out["sample_exclude"] = list(space.sample_exclude)
    out["skeleton"] = []
    for st in space.skeleton:
        d = {"repeat": st.repeat, "c_out": st.c_out, "f_in": st.f_in, "f_out": st.f_out, "cell": st.cell}
        if st.c_in is not None:
            d["c_in"] = st.c_in
        out["skeleton"].append(d)
    if out["slots"] is None:
        del out["slots"]
    return out


def builtin_spaces() -> list[str]:
    files = resources.files("sedproxy.spaces").iterdir()
    return sorted(f.name[:-5] for f in files if f.name.endswith(".json"))


def load_space(source: Union[str, os.PathLike, Mapping]) -> SearchSpaceDescriptor:
    """Load a descriptor from a mapping, a JSON file, or a bundled name.

    Bundled names: ``tss``, ``darts``, ``darts-search`` (see ``builtin_spaces``).
    A generic document with a top-level ``space`` key is accepted too.
    """
    if isinstance(source, Mapping):
        doc = source
    else:
        name = os.fspath(source)
        if not os.path.exists(name) and name in builtin_spaces():
            text = resources.files("sedproxy.spaces").joinpath(name + ".json").read_text("utf-8")
        else:
            with open(name, encoding="utf-8") as fh:
                text = fh.read()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc.msg}", exc.pos) from None
    if isinstance(doc, Mapping) and "space" in doc and "ops" not in doc:
        return space_from_dict(doc["space"], "$.space")
    return space_from_dict(doc)


# ---------------------------------------------------------------------------
# architectures


def _expand(
    space: SearchSpaceDescriptor,
    cells: Mapping[str, Mapping[OpKind, int]],
    encoding: str,
) -> Architecture:
    """Lay cell tallies out over the skeleton; identical geometry shares a Block."""
    made: dict[tuple, Block] = {}
    shared = {cell: MappingProxyType({op: n for op, n in counts.items() if n}) for cell, counts in cells.items()}
    blocks = []
    for c_in, c_out, f_in, f_out, cell in space.block_geometry():
        key = (c_in, c_out, f_in, f_out, cell)
        block = made.get(key)
        if block is None:
            block = made[key] = Block(shared[cell], c_in, c_out, f_in, f_out, space.slots, cell)
        blocks.append(block)
    return Architecture(tuple(blocks), space, encoding)


def _to_text(encoding: Union[str, bytes]) -> str:
    if isinstance(encoding, (bytes, bytearray)):
        try:
            return bytes(encoding).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError("invalid UTF-8", exc.start) from None
    if not isinstance(encoding, str):
        raise ParseError(f"expected text, got {type(encoding).__name__}", 0)
    return encoding


def _tss_edges(text: str) -> list[list[tuple[str, int, int]]]:
    """Split a cell string into nodes of (token, input index, offset)."""
    lead = len(text) - len(text.lstrip())
    body = text.strip()
    if not body:
        raise ParseError("empty cell string", lead)
    nodes: list[list[tuple[str, int, int]]] = []
    pos = 0
    n = len(body)
    while True:
        if pos >= n or body[pos] != "|":
            raise ParseError("expected '|'", lead + pos)
        pos += 1
        edges = []
        while True:
            end = body.find("|", pos)
            if end < 0:
                raise ParseError("unterminated edge, expected '|'", lead + n)
            field_ = body[pos:end]
            if "~" not in field_:
                raise ParseError(f"edge {field_!r} is missing '~'", lead + pos)
            token, _, idx = field_.rpartition("~")
            if not token:
                raise ParseError("empty operation name", lead + pos)
            if not idx.isdigit() or not idx.isascii():
                raise ParseError(f"bad input index {idx!r}", lead + pos + len(token) + 1)
            edges.append((token, int(idx), lead + pos))
            pos = end + 1
            if pos >= n or body[pos] == "+":
                break
        nodes.append(edges)
        if pos >= n:
            return nodes
        pos += 1  # '+'


def parse_tss(encoding: Union[str, bytes], space: SearchSpaceDescriptor) -> Architecture:
    """Parse a NATS-Bench topology cell string against ``space``."""
    text = _to_text(encoding)
    nodes = _tss_edges(text)
    expected = space.slots
    if expected is not None:
        want_nodes = _tss_node_count(expected)
        if want_nodes is not None and len(nodes) != want_nodes:
            raise ParseError(f"expected {want_nodes} nodes, found {len(nodes)}", len(text))
    counts: dict[OpKind, int] = {}
    for j, edges in enumerate(nodes):
        if len(edges) != j + 1:
            raise ParseError(f"node {j + 1} must have {j + 1} input edges, found {len(edges)}", edges[0][2])
        for k, (token, idx, off) in enumerate(edges):
            if token not in space.ops:
                raise ParseError(f"unknown operation {token}", off)
            if idx != k:
                raise ParseError(f"edge input index {idx} out of order (expected {k})", off + len(token) + 1)
            op = space.ops[token]
            counts[op] = counts.get(op, 0) + 1
    return _expand(space, {"normal": counts, "reduce": counts}, text.strip())


def _tss_node_count(slots: int) -> Optional[int]:
    # node j has j inputs, so m nodes hold m(m+1)/2 edges
    m = 0
    while m * (m + 1) // 2 < slots:
        m += 1
    return m if m * (m + 1) // 2 == slots else None


# --- DARTS ------------------------------------------------------------------

_DARTS_FIELDS = ("normal", "normal_concat", "reduce", "reduce_concat")


def _literal(node: ast.AST, path: str) -> Any:
    """Evaluate the restricted literal subset a genotype repr uses."""
    if isinstance(node, ast.Constant) and isinstance(node.value, (str, int)) and not isinstance(node.value, bool):
        return node.value
    if isinstance(node, (ast.List, ast.Tuple)):
        return [_literal(e, f"{path}[{i}]") for i, e in enumerate(node.elts)]
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in ("range", "list"):
        args = [_literal(a, path) for a in node.args]
        if node.func.id == "list" and len(args) == 1:
            return list(args[0])
        if all(isinstance(a, int) for a in args) and 1 <= len(args) <= 3:
            return list(range(*args))
    raise ParseError("unsupported expression in genotype", path)


def _darts_doc(text: str) -> dict:
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", exc.pos) from None
        if not isinstance(doc, dict):
            raise ParseError("expected a JSON object", "$")
        return doc
    try:
        tree = ast.parse(stripped, mode="eval")
    except SyntaxError as exc:
        line_starts = [0]
        for line in stripped.splitlines(keepends=True):
            line_starts.append(line_starts[-1] + len(line))
        lineno = min(max((exc.lineno or 1) - 1, 0), len(line_starts) - 1)
        raise ParseError(f"syntax error in genotype: {exc.msg}", line_starts[lineno] + max((exc.offset or 1) - 1, 0)) from None
    except (ValueError, RecursionError, MemoryError):
        raise ParseError("unparsable genotype", 0) from None
    call = tree.body
    if not isinstance(call, ast.Call):
        raise ParseError("expected Genotype(...)", getattr(call, "col_offset", 0))
    if len(call.args) > len(_DARTS_FIELDS):
        raise ParseError("too many positional fields in genotype", call.col_offset)
    doc = {}
    for name, arg in zip(_DARTS_FIELDS, call.args):
        doc[name] = _literal(arg, f"$.{name}")
    for kw in call.keywords:
        if kw.arg is None:
            raise ParseError("** expansion not supported in genotype", kw.value.col_offset)
        doc[kw.arg] = _literal(kw.value, f"$.{kw.arg}")
    return doc


def _darts_nodes(raw: Any, path: str) -> list[list[tuple[str, int]]]:
    """Group a cell's edge list into per-node input lists."""
    if not isinstance(raw, list):
        raise ParseError("expected a list of (op, input) pairs", path)

    def is_pair(e):
        return isinstance(e, list) and len(e) == 2 and isinstance(e[0], str) and isinstance(e[1], int)

    if all(is_pair(e) for e in raw):
        if len(raw) % 2:
            raise ParseError(f"arity mismatch: {len(raw)} edges cannot give every node exactly 2 inputs", path)
        return [[tuple(raw[i]), tuple(raw[i + 1])] for i in range(0, len(raw), 2)]
    nodes = []
    for i, node in enumerate(raw):
        p = f"{path}[{i}]"
        if not isinstance(node, list) or not all(is_pair(e) for e in node):
            raise ParseError("expected a list of (op, input) pairs for the node", p)
        if len(node) != 2:
            raise ParseError(f"arity mismatch: node has {len(node)} inputs, expected 2", p)
        nodes.append([tuple(e) for e in node])
    return nodes


def parse_darts(genotype: Union[str, bytes, Mapping], space: SearchSpaceDescriptor) -> Architecture:
    """Parse a DARTS genotype (repr text, JSON text, or mapping).

    Edges may be given flat (two consecutive pairs per intermediate node, as
    DARTS prints them) or nested per node.
    """
    if isinstance(genotype, Mapping):
        doc = dict(genotype)
        encoding = json.dumps(doc, sort_keys=True)
    else:
        encoding = _to_text(genotype).strip()
        doc = _darts_doc(encoding)
    cells: dict[str, dict[OpKind, int]] = {}
    want_nodes = space.slots // 2 if space.slots else None
    for cell in ("normal", "reduce"):
        if cell not in doc:
            raise ParseError(f"genotype has no {cell} cell", f"$.{cell}")
        nodes = _darts_nodes(doc[cell], f"$.{cell}")
        if want_nodes is not None and len(nodes) != want_nodes:
            raise ParseError(f"arity mismatch: expected {want_nodes} intermediate nodes, found {len(nodes)}", f"$.{cell}")
        counts: dict[OpKind, int] = {}
        for k, node in enumerate(nodes):
            for j, (token, src) in enumerate(node):
                p = f"$.{cell}[{2 * k + j}]"
                if token not in space.ops:
                    raise ParseError(f"unknown operation {token}", p)
                if not 0 <= src <= k + 1:
                    raise ParseError(f"node {k} cannot take input {src} (valid 0..{k + 1})", p)
                op = space.op_for(token, cell)
                counts[op] = counts.get(op, 0) + 1
        cells[cell] = counts
    return _expand(space, cells, encoding)


def format_darts(normal: list[tuple[str, int]], reduce: list[tuple[str, int]]) -> str:
    """Canonical genotype text, as DARTS prints it."""
    n_nodes = len(normal) // 2
    concat = f"range(2, {n_nodes + 2})"
    return f"Genotype(normal={normal!r}, normal_concat={concat}, reduce={reduce!r}, reduce_concat={concat})"


# --- generic JSON -----------------------------------------------------------


def parse_generic(doc: Union[str, bytes, Mapping]) -> tuple[SearchSpaceDescriptor, Architecture]:
    """Parse a self-contained ``{"schema": 1, "space": ..., "arch": ...}`` document.

    Block geometry may be omitted when the block list lines up one-to-one
    with the expanded skeleton. Raises SchemaError (with a JSON path) or
    ValidationError.
    """
    if not isinstance(doc, Mapping):
        text = _to_text(doc)
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc.msg}", exc.pos) from None
        except RecursionError:
            raise SchemaError("JSON nested too deeply", 0) from None
    if not isinstance(doc, Mapping):
        raise SchemaError("expected an object", "$")
    version = _req(doc, "schema", "$")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version {version!r}", "$.schema")
    space = space_from_dict(_req(doc, "space", "$"), "$.space")
    arch_doc = _req(doc, "arch", "$")
    blocks_doc = _req(arch_doc, "blocks", "$.arch")
    if not isinstance(blocks_doc, list):
        raise SchemaError("expected a list of blocks", "$.arch.blocks")
    geometry = space.block_geometry()
    aligned = len(blocks_doc) == len(geometry)
    blocks = []
    for i, b in enumerate(blocks_doc):
        p = f"$.arch.blocks[{i}]"
        counts_doc = _req(b, "counts", p)
        if not isinstance(counts_doc, Mapping):
            raise SchemaError("expected an object of operation counts", f"{p}.counts")
        cell = b.get("cell", geometry[i][4] if aligned else "normal")
        if cell not in ("normal", "reduce"):
            raise SchemaError(f"cell must be 'normal' or 'reduce', got {cell!r}", f"{p}.cell")
        counts: dict[OpKind, int] = {}
        for token, n in counts_doc.items():
            n = _pos_int(n, f"{p}.counts.{token}", allow_zero=True)
            if token in space.ops:
                op = space.op_for(token, cell)
            else:
                # kept as an unknown op so validation reports it
                op = OpKind.other(str(token))
            counts[op] = counts.get(op, 0) + n
        geo = {}
        for j, key in enumerate(("c_in", "c_out", "f_in", "f_out")):
            if key in b:
                geo[key] = _pos_int(b[key], f"{p}.{key}")
            elif aligned:
                geo[key] = geometry[i][j]
            else:
                raise SchemaError(
                    f"missing {key!r}; geometry can only be inferred when blocks match the skeleton", f"{p}.{key}"
                )
        slots = b.get("slots", space.slots)
        if slots is not None:
            slots = _pos_int(slots, f"{p}.slots")
        blocks.append(Block(counts, slots=slots, cell=cell, **geo))
    encoding = arch_doc.get("encoding", "")
    if not isinstance(encoding, str):
        raise SchemaError("expected a string", "$.arch.encoding")
    arch = Architecture(tuple(blocks), space, encoding)
    result = validate(arch, space)
    if not result.ok:
        raise ValidationError(result.violations)
    return space, arch


def serialize(arch: Architecture, space: Optional[SearchSpaceDescriptor] = None, indent: Optional[int] = None) -> str:
    """Generic-JSON text for ``arch``; ``parse_generic`` inverts it."""
    space = space if space is not None else arch.space
    if space is None:
        raise ValueError("serialize() needs a search space")
    blocks = []
    for b in arch.blocks:
        counts = {}
        for op, n in b.op_counts.items():
            if n:
                token = space.token_for(op)
                counts[token] = counts.get(token, 0) + n
        blocks.append(
            {"cell": b.cell, "c_in": b.c_in, "c_out": b.c_out, "f_in": b.f_in, "f_out": b.f_out,
             "slots": b.slots, "counts": counts}
        )
        if b.slots is None:
            del blocks[-1]["slots"]
    doc = {
        "schema": SCHEMA_VERSION,
        "space": space_to_dict(space),
        "arch": {"encoding": arch.encoding, "blocks": blocks},
    }
    return json.dumps(doc, indent=indent)


def parse(encoding: Union[str, bytes, Mapping], space: SearchSpaceDescriptor) -> Architecture:
    """Dispatch on the space's declared encoding format."""
    if space.encoding == EncodingFormat.TSS:
        return parse_tss(encoding, space)
    if space.encoding == EncodingFormat.DARTS:
        return parse_darts(encoding, space)
    _, arch = parse_generic(encoding)
    return arch
