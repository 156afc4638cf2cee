import math

import pytest

import oracles
from fixture_blocks import FIXTURES, SPACES, WORKED_EXAMPLE, library_arch, library_space
from sedproxy import Architecture, Block, ValidationError, batch_score, load_space, parse_tss, sed, sig
from sedproxy.sed import conv_sed, pool_sed, sed_value, skip_sed

WORKED = "|nor_conv_3x3~0|+|nor_conv_3x3~0|skip_connect~1|+|avg_pool_3x3~0|nor_conv_1x1~1|none~2|"


@pytest.fixture(scope="module")
def tss():
    return load_space("tss")


def tss_block(space, counts, c_out=16, f_in=1024, f_out=1024):
    return Block({space.ops[t]: n for t, n in counts.items()}, c_out, c_out, f_in, f_out)


class TestSig:
    @pytest.mark.parametrize("x, expected", [(0, 0.5), (1, 0.7310585786), (16, 0.9999998875)])
    def test_values(self, x, expected):
        assert sig(x) == pytest.approx(expected, abs=1e-10)

    def test_saturates(self):
        assert sig(1e6) == 1.0 and sig(-1e6) == 0.0


class TestSubScores:
    @pytest.mark.parametrize("n, expected", [(0, 0.0), (1, 0.7310585786), (2, 1.7615941560)])
    def test_skip_sed(self, tss, n, expected):
        counts = {"skip_connect": n, "none": 6 - n}
        assert skip_sed(tss_block(tss, counts)) == pytest.approx(expected, abs=1e-10)

    def test_conv_sed_only_dominating(self, tss):
        block = tss_block(tss, {"nor_conv_3x3": 2, "nor_conv_1x1": 1})
        assert conv_sed(block, tss) == pytest.approx(1.9999997750, abs=1e-9)

    def test_conv_sed_without_pools(self):
        space = library_space("nopool")
        block = Block({space.ops["c3"]: 2, space.ops["c1"]: 1}, 16, 16, 1024, 1024)
        assert conv_sed(block, space) == pytest.approx(2.9999996625, abs=1e-9)

    def test_conv_sed_no_convs(self, tss):
        assert conv_sed(tss_block(tss, {"skip_connect": 6}), tss) == 0.0

    @pytest.mark.parametrize(
        "counts, expected",
        [(WORKED_EXAMPLE, 36.0), ({}, 0.0), ({"avg_pool_3x3": 3, "nor_conv_1x1": 3}, 0.0)],
    )
    def test_pool_sed(self, tss, counts, expected):
        assert pool_sed(tss_block(tss, counts), tss) == expected

    def test_pool_sed_count_none(self, tss):
        block = tss_block(tss, {"none": 4, "nor_conv_3x3": 2})
        assert pool_sed(block, tss) == 4 + 36
        assert pool_sed(block, tss, count_none=False) == 4 + 4


class TestSed:
    def test_worked_example(self, tss):
        arch = Architecture((tss_block(tss, WORKED_EXAMPLE),), tss)
        result = sed(arch)
        assert result.sed == pytest.approx(29.2268, abs=1e-4)
        bs = result.per_block[0]
        assert bs.skip_sed == pytest.approx(0.7310585786, abs=1e-10)
        assert bs.conv_sed == pytest.approx(1.9999997750, abs=1e-9)
        assert bs.pool_sed == 36.0

    def test_all_none_is_half_ratio(self, tss):
        arch = parse_tss("|none~0|+|none~0|none~1|+|none~0|none~1|none~2|", tss)
        assert sed(arch).sed == pytest.approx(18.0, abs=1e-5)

    def test_empty_block_scores_zero(self):
        space = load_space({"ops": {"s": {"type": "skip"}, "p": {"type": "pool", "size": 3}},
                            "skeleton": [{"c_out": 16, "f_in": 4, "f_out": 4}]})
        arch = Architecture((Block({}, 16, 16, 4, 4),), space)
        assert sed(arch).sed == 0.0

    @pytest.mark.parametrize("fixture", FIXTURES, ids=[f[0] for f in FIXTURES])
    def test_matches_oracle(self, fixture):
        _, key, counts, c_out, f_in, f_out = fixture
        space = library_space(key)
        got = sed(library_arch(space, counts, c_out, f_in, f_out), space).sed
        want = oracles.sed_block(counts, SPACES[key][0], c_out, f_in, f_out)
        assert got == pytest.approx(want, rel=1e-12)

    @pytest.mark.parametrize("fixture", FIXTURES, ids=[f[0] for f in FIXTURES])
    def test_matches_oracle_without_none(self, fixture):
        _, key, counts, c_out, f_in, f_out = fixture
        space = library_space(key)
        got = sed(library_arch(space, counts, c_out, f_in, f_out), space, count_none=False).sed
        want = oracles.sed_block(counts, SPACES[key][0], c_out, f_in, f_out, count_none=False)
        assert got == pytest.approx(want, rel=1e-12)

    def test_mean_over_tss_skeleton(self, tss):
        arch = parse_tss(WORKED, tss)
        counts = {"nor_conv_3x3": 2, "skip_connect": 1, "avg_pool_3x3": 1, "nor_conv_1x1": 1, "none": 1}
        blocks = [(counts, c, f, f) for c, f in ((16, 1024), (32, 256), (64, 64)) for _ in range(5)]
        assert sed(arch).sed == pytest.approx(oracles.sed_arch(blocks, SPACES["tss"][0]), rel=1e-12)

    def test_breakdown_dict(self, tss):
        doc = sed(parse_tss(WORKED, tss)).to_dict()
        assert len(doc["per_block"]) == 15
        assert set(doc["per_block"][0]) == {"skip_sed", "conv_sed", "pool_sed", "ratio", "block_score"}

    def test_invalid_raises(self, tss):
        with pytest.raises(ValidationError):
            sed(Architecture((), tss))
        with pytest.raises(ValidationError):
            sed(Architecture((tss_block(tss, {"nor_conv_3x3": 5}),), tss))

    def test_needs_space(self, tss):
        with pytest.raises(ValueError):
            sed(Architecture((tss_block(tss, WORKED_EXAMPLE),)))

    def test_fast_path_bitwise(self, tss):
        for enc in (WORKED, "|skip_connect~0|+|nor_conv_3x3~0|nor_conv_3x3~1|+|avg_pool_3x3~0|none~1|skip_connect~2|"):
            arch = parse_tss(enc, tss)
            assert sed_value(arch, tss) == sed(arch).sed


class TestBatch:
    def test_order_and_ids(self, tss):
        encs = [WORKED, "|none~0|+|none~0|none~1|+|none~0|none~1|none~2|", WORKED]
        out = batch_score([parse_tss(e, tss) for e in encs], tss)
        assert [k for k, _ in out] == encs
        assert out[0][1] == out[2][1]

    def test_empty(self, tss):
        assert batch_score([], tss) == []

    def test_error_reported_in_place(self, tss):
        bad = Architecture((tss_block(tss, {"none": 2}),), tss)
        out = batch_score([parse_tss(WORKED, tss), bad], tss)
        assert isinstance(out[1][1], ValidationError)
        assert out[1][0] == "1"
        assert math.isfinite(out[0][1])

    def test_thread_count_irrelevant(self, tss):
        from sedproxy.search import sample_random

        archs = sample_random(tss, 300, seed=3)
        one = batch_score(archs, tss, threads=1)
        four = batch_score(archs, tss, threads=4)
        assert one == four

    def test_env_threads(self, tss, monkeypatch):
        monkeypatch.setenv("SED_THREADS", "3")
        archs = [parse_tss(WORKED, tss)] * 10
        assert len(batch_score(archs, tss)) == 10
