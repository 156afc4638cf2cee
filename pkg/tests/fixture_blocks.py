"""Hand-specified blocks shared by the SED unit and acceptance tests.

Each space is described twice: as plain tuples for the oracle and as the
JSON document the library loads.
"""

from sedproxy import Architecture, Block, load_space

# oracle form
TSS_OPS = {
    "none": ("none",),
    "skip_connect": ("skip",),
    "nor_conv_1x1": ("conv", 1, 1),
    "nor_conv_3x3": ("conv", 3, 3),
    "avg_pool_3x3": ("pool", 3, 3, 1, 1, "avg"),
}
DARTS_OPS = {
    "none": ("none",),
    "max_pool_3x3": ("pool", 3, 3, 1, 1, "max"),
    "avg_pool_3x3": ("pool", 3, 3, 1, 1, "avg"),
    "skip_connect": ("skip",),
    "sep_conv_3x3": ("conv", 3, 3),
    "sep_conv_5x5": ("conv", 5, 5),
    "dil_conv_3x3": ("conv", 5, 5),
    "dil_conv_5x5": ("conv", 9, 9),
}
NOPOOL_OPS = {
    "none": ("none",),
    "skip": ("skip",),
    "c1": ("conv", 1, 1),
    "c3": ("conv", 3, 3),
}
# no skip; two 3x3 pools tie on size and the stride-1 one leads, so only the
# 3x3 kernel dominates (against the stride-2 pool, 2x2 would too)
NOSKIP_OPS = {
    "c2": ("conv", 2, 2),
    "c3": ("conv", 3, 3),
    "c31": ("conv", 3, 1),
    "mp_s2": ("pool", 3, 3, 2, 2, "max"),
    "ap_s1": ("pool", 3, 3, 1, 1, "avg"),
    "p2": ("pool", 2, 2, 1, 1, "max"),
}
# library form
_SKELETON = [{"repeat": 1, "c_out": 16, "f_in": 1024, "f_out": 1024}]


def _doc(ops):
    out = {}
    for name, d in ops.items():
        if d[0] in ("none", "skip"):
            out[name] = {"type": d[0]}
        elif d[0] == "conv":
            out[name] = {"type": "conv", "kernel": [d[1], d[2]]}
        else:
            out[name] = {"type": "pool", "size": [d[1], d[2]], "stride": [d[3], d[4]], "kind": d[5]}
    return out


def space_doc(ops, name="fixture"):
    return {"schema": 1, "name": name, "ops": _doc(ops), "skeleton": _SKELETON}


# dilated 3x3 at dilation 2 enters the library through the dilation field
_DARTS_DOC = space_doc(DARTS_OPS, "darts-fixture")
_DARTS_DOC["ops"]["dil_conv_3x3"] = {"type": "conv", "kernel": [3, 3], "dilation": 2}
_DARTS_DOC["ops"]["dil_conv_5x5"] = {"type": "conv", "kernel": [5, 5], "dilation": 2}

SPACES = {
    "tss": (TSS_OPS, space_doc(TSS_OPS, "tss-fixture")),
    "darts": (DARTS_OPS, _DARTS_DOC),
    "nopool": (NOPOOL_OPS, space_doc(NOPOOL_OPS, "nopool")),
    "noskip": (NOSKIP_OPS, space_doc(NOSKIP_OPS, "noskip")),
}

# (id, space, counts, c_out, f_in, f_out)
WORKED_EXAMPLE = {"nor_conv_3x3": 2, "skip_connect": 1, "avg_pool_3x3": 1, "nor_conv_1x1": 1, "none": 1}
FIXTURES = [
    ("worked-example", "tss", WORKED_EXAMPLE, 16, 1024, 1024),
    ("all-none", "tss", {"none": 6}, 16, 1024, 1024),
    ("all-conv3", "tss", {"nor_conv_3x3": 6}, 32, 256, 256),
    ("suppressive", "tss", {"avg_pool_3x3": 3, "nor_conv_1x1": 3}, 64, 64, 64),
    ("downsampling", "tss", {"skip_connect": 2, "nor_conv_3x3": 3, "none": 1}, 32, 1024, 256),
    ("darts-normal", "darts", {"sep_conv_3x3": 3, "dil_conv_3x3": 1, "skip_connect": 2, "max_pool_3x3": 2}, 144, 1024, 1024),
    ("darts-heavy-pool", "darts", {"max_pool_3x3": 4, "avg_pool_3x3": 3, "dil_conv_5x5": 1}, 576, 64, 16),
    ("no-pool-fallback", "nopool", {"c3": 3, "c1": 2, "skip": 1}, 16, 1024, 1024),
    ("no-skip-fallback", "noskip", {"c3": 2, "c2": 2, "c31": 1, "mp_s2": 1}, 48, 256, 256),
    ("pool-heavy-upsample", "noskip", {"p2": 4, "ap_s1": 1, "c3": 1}, 8, 100, 400),
]


def library_space(space_key):
    return load_space(SPACES[space_key][1])


def library_arch(space, counts, c_out, f_in, f_out):
    # several tokens may fold onto one operation kind
    ops = {}
    for name, n in counts.items():
        op = space.ops[name]
        ops[op] = ops.get(op, 0) + n
    block = Block(ops, c_in=c_out, c_out=c_out, f_in=f_in, f_out=f_out)
    return Architecture((block,), space, "")
