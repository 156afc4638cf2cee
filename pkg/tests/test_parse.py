import json

import pytest

from sedproxy import (
    ParseError,
    SchemaError,
    ValidationError,
    load_space,
    parse_darts,
    parse_generic,
    parse_tss,
    serialize,
)
from sedproxy.parse import format_darts, parse, space_from_dict, space_to_dict

WORKED = "|nor_conv_3x3~0|+|nor_conv_3x3~0|skip_connect~1|+|avg_pool_3x3~0|nor_conv_1x1~1|none~2|"
ALL_NONE = "|none~0|+|none~0|none~1|+|none~0|none~1|none~2|"

DARTS_V2 = (
    "Genotype(normal=[('sep_conv_3x3', 0), ('sep_conv_3x3', 1), ('sep_conv_3x3', 0), ('sep_conv_3x3', 1), "
    "('sep_conv_3x3', 1), ('skip_connect', 0), ('skip_connect', 0), ('dil_conv_3x3', 2)], normal_concat=[2, 3, 4, 5], "
    "reduce=[('max_pool_3x3', 0), ('max_pool_3x3', 1), ('skip_connect', 2), ('max_pool_3x3', 1), ('max_pool_3x3', 0), "
    "('skip_connect', 2), ('skip_connect', 2), ('max_pool_3x3', 1)], reduce_concat=[2, 3, 4, 5])"
)


@pytest.fixture(scope="module")
def tss():
    return load_space("tss")


@pytest.fixture(scope="module")
def darts():
    return load_space("darts")


def tally(block, space):
    return {space.token_for(op): n for op, n in block.op_counts.items()}


class TestTss:
    def test_worked_example_counts(self, tss):
        arch = parse_tss(WORKED, tss)
        assert arch.n == 15
        assert tally(arch.blocks[0], tss) == {
            "nor_conv_3x3": 2, "skip_connect": 1, "avg_pool_3x3": 1, "nor_conv_1x1": 1, "none": 1,
        }
        assert arch.encoding == WORKED

    def test_all_none(self, tss):
        arch = parse_tss(ALL_NONE, tss)
        assert tally(arch.blocks[0], tss) == {"none": 6}

    def test_geometry_follows_skeleton(self, tss):
        arch = parse_tss(WORKED, tss)
        assert [(b.c_out, b.f_in) for b in arch.blocks[::5]] == [(16, 1024), (32, 256), (64, 64)]

    def test_unknown_op(self, tss):
        with pytest.raises(ParseError) as exc:
            parse_tss("|bad_op~0|+|none~0|none~1|+|none~0|none~1|none~2|", tss)
        assert "unknown operation bad_op" in str(exc.value)
        assert exc.value.position == 1

    @pytest.mark.parametrize(
        "text",
        [
            "",
            "nor_conv_3x3~0|",
            "|nor_conv_3x3~0",
            "|nor_conv_3x3|+|none~0|none~1|+|none~0|none~1|none~2|",
            "|none~1|+|none~0|none~1|+|none~0|none~1|none~2|",
            "|none~0|+|none~0|+|none~0|none~1|none~2|",
            "|none~0|+|none~0|none~1|",
            "|none~x|+|none~0|none~1|+|none~0|none~1|none~2|",
        ],
    )
    def test_malformed_has_position(self, tss, text):
        with pytest.raises(ParseError) as exc:
            parse_tss(text, tss)
        assert exc.value.position is not None

    def test_bytes_and_trimming(self, tss):
        a = parse_tss(("  " + WORKED + "\n").encode("utf-8"), tss)
        assert a.structurally_equal(parse_tss(WORKED, tss))

    def test_invalid_utf8(self, tss):
        with pytest.raises(ParseError):
            parse_tss(b"\xff\xfe", tss)


class TestDarts:
    def test_repr_text(self, darts):
        arch = parse_darts(DARTS_V2, darts)
        assert arch.n == 20
        normal, reduce_ = arch.blocks[0], arch.blocks[6]
        assert normal.cell == "normal" and reduce_.cell == "reduce"
        # dil_conv_3x3 folds to the same 5x5 kind as sep_conv_5x5
        assert {str(op): n for op, n in normal.op_counts.items()} == {"conv3x3": 5, "skip": 2, "conv5x5": 1}
        assert sum(reduce_.op_counts.values()) == 8

    def test_reduce_cell_pools_use_stride_two(self, darts):
        arch = parse_darts(DARTS_V2, darts)
        pools = [op for op in arch.blocks[6].op_counts if op.tag == "pool"]
        assert pools and all(op.stride.s_1 == 2 for op in pools)

    def test_dilated_conv_folds(self, darts):
        op = darts.ops["dil_conv_3x3"]
        assert (op.kernel.k_w, op.kernel.k_h, op.kernel.dilation) == (5, 5, 1)

    def test_json_and_dict_forms_agree(self, darts):
        nodes = [("sep_conv_3x3", 0), ("skip_connect", 1)] * 4
        doc = {"normal": [list(e) for e in nodes], "reduce": [list(e) for e in nodes]}
        a = parse_darts(json.dumps(doc), darts)
        b = parse_darts(doc, darts)
        c = parse_darts(format_darts(nodes, nodes), darts)
        assert a.structurally_equal(b) and b.structurally_equal(c)

    def test_nested_nodes(self, darts):
        nested = [[["sep_conv_3x3", 0], ["sep_conv_5x5", 1]]] * 4
        arch = parse_darts({"normal": nested, "reduce": nested}, darts)
        assert sum(arch.blocks[0].op_counts.values()) == 8

    def test_arity_mismatch(self, darts):
        doc = {"normal": [["sep_conv_3x3", 0]] * 7, "reduce": [["sep_conv_3x3", 0]] * 8}
        with pytest.raises(ParseError, match="arity mismatch"):
            parse_darts(doc, darts)

    def test_input_index_bound(self, darts):
        doc = {"normal": [["sep_conv_3x3", 2]] * 8, "reduce": [["sep_conv_3x3", 0]] * 8}
        with pytest.raises(ParseError) as exc:
            parse_darts(doc, darts)
        assert exc.value.position == "$.normal[0]"

    @pytest.mark.parametrize("text", ["Genotype(normal=__import__('os'))", "Genotype(", "42", "{bad json"])
    def test_rejects_non_literal(self, darts, text):
        with pytest.raises(ParseError):
            parse_darts(text, darts)


class TestGeneric:
    def test_round_trip(self, tss):
        arch = parse_tss(WORKED, tss)
        space, back = parse_generic(serialize(arch, tss))
        assert back.structurally_equal(arch)
        assert back.encoding == WORKED
        assert space_to_dict(space) == space_to_dict(tss)

    def test_geometry_inferred(self, tss):
        doc = {
            "schema": 1,
            "space": space_to_dict(tss),
            "arch": {"blocks": [{"counts": {"nor_conv_3x3": 6}}] * 15},
        }
        _, arch = parse_generic(doc)
        assert arch.blocks[14].c_out == 64

    def test_geometry_required_when_unaligned(self, tss):
        doc = {"schema": 1, "space": space_to_dict(tss), "arch": {"blocks": [{"counts": {"none": 6}}]}}
        with pytest.raises(SchemaError) as exc:
            parse_generic(doc)
        assert exc.value.position == "$.arch.blocks[0].c_in"

    def test_unknown_token_fails_validation(self, tss):
        blocks = [{"counts": {"warp_drive": 6}}] * 15
        doc = {"schema": 1, "space": space_to_dict(tss), "arch": {"blocks": blocks}}
        with pytest.raises(ValidationError, match="unknown operation"):
            parse_generic(doc)

    @pytest.mark.parametrize(
        "doc, path",
        [
            ({"schema": 2}, "$.schema"),
            ({"schema": 1}, "$.space"),
            ({"schema": 1, "space": {"ops": {"a": {"type": "skip"}}}}, "$.space.skeleton"),
            ({"schema": 1, "space": {"ops": {"a": {"type": "warp"}}, "skeleton": []}}, "$.space.ops.a.type"),
        ],
    )
    def test_schema_errors_carry_path(self, doc, path):
        with pytest.raises(SchemaError) as exc:
            parse_generic(doc)
        assert exc.value.position == path

    def test_invalid_json_offset(self):
        with pytest.raises(SchemaError) as exc:
            parse_generic('{"schema": 1,,}')
        assert isinstance(exc.value.position, int)

    def test_dispatch(self, tss, darts):
        assert parse(WORKED, tss).n == 15
        assert parse(DARTS_V2, darts).n == 20


class TestSpaces:
    @pytest.mark.parametrize("name", ["tss", "darts", "darts-search"])
    def test_builtin_round_trip(self, name):
        space = load_space(name)
        again = space_from_dict(space_to_dict(space))
        assert space_to_dict(again) == space_to_dict(space)

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "s.json"
        path.write_text(json.dumps(space_to_dict(load_space("tss"))))
        assert load_space(str(path)).n_blocks == 15

    def test_missing_file(self):
        with pytest.raises(OSError):
            load_space("/nonexistent/space.json")
