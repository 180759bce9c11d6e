import random

import pytest

from colcirc import (
    Column,
    SchemeInstance,
    decode,
    encode,
    evaluate_circuit,
    make_column,
    scalar_column,
    verify,
)
from colcirc import comp_schemes as cs
from colcirc import ops
from colcirc.errors import NotEncodable
from colcirc.rep_schemes import canonical_varwidth, varwidth_elements
from colcirc.types import I8, INT, U8, U16, U32, ElementType

from scheme_cases import CASES, corruption_battery, roundtrip_battery

u8 = lambda v: make_column(U8, v)
u16 = lambda v: make_column(U16, v)
u32 = lambda v: make_column(U32, v)
idx = lambda v: make_column(INT, v)


class TestGenerated:
    def test_degree0(self):
        inst = SchemeInstance(
            "generated",
            {"type": "u8", "basis": [0]},
            {"length": scalar_column(INT, 3), "coefficients": u8([7])},
        )
        assert decode(inst)["col"].values == (7, 7, 7)

    def test_affine(self):
        inst = SchemeInstance(
            "generated",
            {"type": "u8", "basis": [0, 1]},
            {"length": scalar_column(INT, 4), "coefficients": u8([3, 2])},
        )
        assert decode(inst)["col"].values == (3, 5, 7, 9)

    def test_square(self):
        inst = SchemeInstance(
            "generated",
            {"type": "u8", "basis": [0, 1, 2]},
            {"length": scalar_column(INT, 4), "coefficients": u8([0, 0, 1])},
        )
        assert decode(inst)["col"].values == (0, 1, 4, 9)

    def test_float_bit_exact(self):
        f64 = ElementType.float_(64)
        col = Column(f64, [0.5 + 0.25 * i for i in range(6)])
        inst = encode("generated", {"type": "f64", "basis": [0, 1]}, col)
        assert decode(inst)["col"] == col


class TestNoisy:
    def test_listing_semantics(self):
        inst = SchemeInstance(
            "noisy.generated",
            {"type": "u8", "basis": [0], "noise_type": "i8"},
            {"coefficients": u8([10]), "noise": make_column(I8, [-1, 0, 2])},
        )
        assert decode(inst)["col"].values == (9, 10, 12)

    def test_zero_noise(self):
        inst = SchemeInstance(
            "noisy.generated",
            {"type": "u8", "basis": [0], "noise_type": "i8"},
            {"coefficients": u8([10]), "noise": make_column(I8, [0, 0])},
        )
        assert decode(inst)["col"].values == (10, 10)

    def test_least_squares_residual_range(self):
        rng = random.Random(0)
        for _ in range(20):
            a, b = rng.randrange(100, 200), rng.randrange(0, 8)
            col = u32([a + b * i + rng.randrange(-15, 15) for i in range(20)])
            inst = encode("noisy.generated", {"type": "u32", "basis": [0, 1], "noise_type": "i8"}, col)
            lo, hi = I8.bounds()
            assert all(lo <= v <= hi for v in inst.columns["noise"].values)
            assert decode(inst)["col"] == col


class TestNarrowing:
    def test_ratio(self):
        from colcirc import compression_ratio

        inst = encode("nullsup", {"type": "u32", "narrow_type": "u8"}, u32([1, 2, 255]))
        assert compression_ratio(inst) == 4

    def test_not_encodable_reports_first_offender(self):
        with pytest.raises(NotEncodable, match="index 1"):
            encode("nullsup", {"type": "u32", "narrow_type": "u8"}, u32([1, 256]))

    def test_signed_sign_extension(self):
        from colcirc.types import I16

        inst = encode("nullsup", {"type": "i16", "narrow_type": "i8"}, make_column(I16, [-3]))
        assert decode(inst)["col"].values == (-3,)


class TestRuns:
    def test_rle(self):
        inst = SchemeInstance(
            "run.rle", {"type": "u8"}, {"length": idx([2, 3]), "value": u8([4, 9])}
        )
        assert decode(inst)["col"].values == (4, 4, 9, 9, 9)

    def test_rpe(self):
        inst = SchemeInstance(
            "run.rpe",
            {"type": "u8"},
            {
                "start_position": idx([0, 2]),
                "value": u8([4, 9]),
                "overall_length": scalar_column(INT, 5),
            },
        )
        assert decode(inst)["col"].values == (4, 4, 9, 9, 9)

    def test_capped_split_rule(self):
        inst = encode("run.rle.capped", {"type": "u8", "cap": 2}, u8([5] * 5))
        assert inst.columns["length"].values == (2, 2, 1)
        assert inst.columns["value"].values == (5, 5, 5)

    def test_rpe_encoder_circuit_matches_host_encoder(self):
        rng = random.Random(1)
        enc = cs.rpe_encoder_circuit({"type": "u16"})
        for _ in range(25):
            col = u16([rng.randrange(0, 4) for _ in range(rng.randrange(0, 25))])
            out = evaluate_circuit(enc, {"col": col})
            host = encode("run.rpe", {"type": "u16"}, col)
            assert out["out:start_position"] == host.columns["start_position"]
            assert out["out:value"] == host.columns["value"]
            assert out["out:overall_length"] == host.columns["overall_length"]

    def test_rle_rpe_interconversion(self):
        rng = random.Random(2)
        for _ in range(25):
            col = u16([rng.randrange(0, 3) for _ in range(rng.randrange(1, 30))])
            rle = encode("run.rle", {"type": "u16"}, col)
            rpe = encode("run.rpe", {"type": "u16"}, col)
            # rle lengths = derivative(rpe starts ++ [overall])
            starts = list(rpe.columns["start_position"].values)
            ends = starts + [rpe.columns["overall_length"].scalar()]
            diffs = [ends[i + 1] - ends[i] for i in range(len(ends) - 1)]
            assert diffs == list(rle.columns["length"].values)
            # rpe starts = exclusive prefix sum of rle lengths
            acc, excl = 0, []
            for l in rle.columns["length"].values:
                excl.append(acc)
                acc += l
            assert excl == starts
            # converting then decoding equals direct decoding
            converted = SchemeInstance(
                "run.rpe",
                {"type": "u16"},
                {
                    "start_position": idx(excl),
                    "value": rle.columns["value"],
                    "overall_length": scalar_column(INT, len(col)),
                },
            )
            assert decode(converted)["col"] == decode(rle)["col"] == col

    def test_compressed_domain_sum(self):
        rng = random.Random(3)
        for _ in range(25):
            col = u16([rng.randrange(0, 9) for _ in range(rng.randrange(0, 40))])
            inst = encode("run.rle", {"type": "u16"}, col)
            # evaluated on the compressed form only
            values = inst.columns["value"]
            lengths = inst.columns["length"]
            compressed_sum = sum(v * l for v, l in zip(values.values, lengths.values))
            assert compressed_sum == sum(decode(inst)["col"].values)


class TestSplines:
    def test_equiknotted_per_segment_constants(self):
        inst = SchemeInstance(
            "spline.equiknotted",
            {"type": "u8", "basis": [0], "interval_length": 2},
            {
                "interval_length": scalar_column(INT, 2),
                "length": scalar_column(INT, 4),
                "coefficients": u8([3, 7]),
            },
        )
        assert decode(inst)["col"].values == (3, 3, 7, 7)

    def test_knotted_piecewise_ramp(self):
        # oracle: direct piecewise evaluation at segment-relative offsets
        segments = [(5, 2, 3), (100, 1, 4)]
        vals = []
        for base, slope, ln in segments:
            vals.extend(base + slope * i for i in range(ln))
        col = u16(vals)
        inst = encode("spline.knotted", {"type": "u16", "basis": [0, 1], "segments": [3, 4]}, col)
        assert decode(inst)["col"] == col

    def test_single_segment_reduces_to_generated(self):
        col = u16([9, 12, 15])
        spline = encode("spline.generalized", {"type": "u16", "basis": [0, 1]}, col)
        gen = encode("generated", {"type": "u16", "basis": [0, 1]}, col)
        assert decode(spline)["col"] == decode(gen)["col"] == col

    def test_float_knots(self):
        f64 = ElementType.float_(64)
        col = Column(f64, [0.0, 0.5, 10.0, 10.25, 10.5])
        inst = encode(
            "spline.knotted",
            {"type": "f64", "basis": [0, 1], "knots_float": True, "segments": [2, 3]},
            col,
        )
        assert verify(inst)
        assert inst.columns["knots"].element_type == f64
        assert decode(inst)["col"] == col


class TestFrameOfReference:
    def test_listing(self):
        inst = SchemeInstance(
            "for",
            {"type": "u16", "offset_type": "u8", "segment_length": 2},
            {
                "segment_length": scalar_column(INT, 2),
                "reference": u16([100, 200]),
                "offsets": u8([1, 2, 3]),
            },
        )
        assert decode(inst)["col"].values == (101, 102, 203)

    def test_zero_offsets_step_function(self):
        inst = SchemeInstance(
            "for",
            {"type": "u16", "offset_type": "u8", "segment_length": 2},
            {
                "segment_length": scalar_column(INT, 2),
                "reference": u16([10, 20]),
                "offsets": u8([0, 0, 0, 0]),
            },
        )
        assert decode(inst)["col"].values == (10, 10, 20, 20)


class TestDeltas:
    def test_naive(self):
        inst = SchemeInstance(
            "delta.naive",
            {"type": "u16", "delta_type": "i8"},
            {"base": scalar_column(U16, 10), "delta": make_column(I8, [-1, 2, 2])},
        )
        assert decode(inst)["col"].values == (9, 11, 13)

    def test_segmented_resets_chains(self):
        inst = SchemeInstance(
            "delta",
            {"type": "u16", "delta_type": "i8", "segment_length": 2},
            {
                "segment_length": scalar_column(INT, 2),
                "base": u16([0, 100]),
                "delta": make_column(I8, [1, 1, 2, 3]),
            },
        )
        assert decode(inst)["col"].values == (1, 2, 102, 105)

    def test_patched_delta_witness(self):
        # k zeros then at least k copies of (k+1)*M with M = sup dom(i8)
        k, M = 4, 127
        col = u16([0] * k + [(k + 1) * M] * (k + 1))
        inst = encode("delta.patched", {"type": "u16", "delta_type": "i8", "segment_length": 9}, col)
        assert decode(inst)["col"] == col
        assert len(inst.columns["patch_pos"]) == 1
        assert inst.columns["patch_pos"].values == (k,)


class TestSegmentDictionaries:
    def test_listing(self):
        inst = SchemeInstance(
            "segdict",
            {"type": "u8", "segment_length": 2, "dict_size": 2},
            {
                "segment_length": scalar_column(INT, 2),
                "dictionary_entries": u8([1, 2, 3, 4]),
                "indices": idx([1, 0, 0, 1]),
            },
        )
        assert decode(inst)["col"].values == (2, 1, 3, 4)

    def test_single_segment_is_plain_dictionary(self):
        col = u16([7, 9, 7])
        seg = encode("segdict", {"type": "u16", "segment_length": 3, "dict_size": 2}, col)
        plain = encode("dict", {"type": "u16"}, col)
        assert decode(seg)["col"] == decode(plain)["col"] == col

    def test_two_level_equals_staged(self):
        rng = random.Random(4)
        for _ in range(15):
            ell, d = rng.randrange(1, 5), rng.randrange(1, 4)
            n = rng.randrange(0, 16)
            vals = []
            for at in range(0, n, ell):
                support = [rng.randrange(0, 99) for _ in range(d)]
                vals.extend(rng.choice(support) for _ in range(min(ell, n - at)))
            col = u16(vals)
            inst = encode("segdict.two_level", {"type": "u16", "segment_length": ell, "dict_size": d}, col)
            # staged oracle: decode the local layer, then the global dictionary
            local = SchemeInstance(
                "segdict",
                {"type": str(INT), "segment_length": ell, "dict_size": d},
                {
                    "segment_length": inst.columns["segment_length"],
                    "dictionary_entries": inst.columns["dictionary_entries"],
                    "indices": inst.columns["indices"],
                },
            )
            codes = decode(local)["col"]
            staged = ops.gather(codes, inst.columns["global_dictionary"])
            assert staged == decode(inst)["col"] == col


class TestCascade:
    def test_hand_simulated_two_phase(self):
        inst = SchemeInstance(
            "cascade",
            {"type": "u8", "bits": [1, 2]},
            {
                "dictionary_1": u8([0, ord("a")]),
                "indices_1": Column(ElementType.unsigned(1), [1, 0, 1]),
                "dictionary_2": u8([0, ord("x"), ord("y")]),
                "indices_2": Column(ElementType.unsigned(2), [2]),
            },
        )
        assert verify(inst)
        assert decode(inst)["col"].values == (ord("a"), ord("y"), ord("a"))

    def test_single_level_no_zeros(self):
        inst = SchemeInstance(
            "cascade",
            {"type": "u8", "bits": [2]},
            {
                "dictionary_1": u8([0, 7, 9]),
                "indices_1": Column(ElementType.unsigned(2), [1, 2, 1]),
            },
        )
        assert decode(inst)["col"].values == (7, 9, 7)

    def test_all_deferred_to_last_level(self):
        inst = SchemeInstance(
            "cascade",
            {"type": "u8", "bits": [1, 2]},
            {
                "dictionary_1": u8([0]),
                "indices_1": Column(ElementType.unsigned(1), [0, 0]),
                "dictionary_2": u8([0, 5, 6]),
                "indices_2": Column(ElementType.unsigned(2), [2, 1]),
            },
        )
        assert decode(inst)["col"].values == (6, 5)


class TestSubcolumnDictionary:
    def test_listing(self):
        inst = SchemeInstance(
            "subdict",
            {"type": "u8", "bits": 4},
            {
                "dictionary": u8([0, ord("a")]),
                "indices": Column(ElementType.unsigned(4), [1, 0, 1]),
                "residual_data": u8([ord("z")]),
            },
        )
        assert decode(inst)["col"].values == (ord("a"), ord("z"), ord("a"))

    def test_no_zeros_is_dictionary(self):
        inst = SchemeInstance(
            "subdict",
            {"type": "u8", "bits": 4},
            {
                "dictionary": u8([0, 5]),
                "indices": Column(ElementType.unsigned(4), [1, 1]),
                "residual_data": u8([]),
            },
        )
        assert decode(inst)["col"].values == (5, 5)

    def test_all_zeros_passthrough(self):
        inst = SchemeInstance(
            "subdict",
            {"type": "u8", "bits": 4},
            {
                "dictionary": u8([0]),
                "indices": Column(ElementType.unsigned(4), [0, 0]),
                "residual_data": u8([8, 9]),
            },
        )
        assert decode(inst)["col"].values == (8, 9)


class TestSurrogatePushdown:
    def test_equality_select_via_codes(self):
        rng = random.Random(5)
        for _ in range(25):
            col = u16([rng.randrange(0, 7) for _ in range(rng.randrange(1, 30))])
            inst = encode("dict.unique", {"type": "u16"}, col)
            v = rng.choice(col.values)
            code = list(inst.columns["dictionary"].values).index(v)
            decoded = decode(inst)["col"]
            by_value = ops.select_indices(
                ops.elementwise("const_compare", [decoded], cmp="eq", value=v)[0]
            )
            by_code = ops.select_indices(
                ops.elementwise(
                    "const_compare", [inst.columns["indices"]], cmp="eq", value=code
                )[0]
            )
            assert by_value == by_code

    def test_monotone_surrogate_order(self):
        rng = random.Random(6)
        for _ in range(25):
            col = u16([rng.randrange(0, 50) for _ in range(rng.randrange(2, 30))])
            inst = encode("dict.monotone", {"type": "u16"}, col)
            codes = inst.columns["indices"].values
            for i in range(len(col) - 1):
                assert (col[i] < col[i + 1]) == (codes[i] < codes[i + 1])


class TestIndexCompression:
    def test_common_prefix_derived_example(self):
        inst = SchemeInstance(
            "idx.common_prefix",
            {"w": 8, "p": 3},
            {
                "prefix": Column(ElementType.unsigned(3), [5]),
                "suffix_count": Column(ElementType.unsigned(5), [2]),
                "suffix": Column(ElementType.unsigned(5), [1, 9]),
            },
        )
        out = decode(inst)
        assert sorted(out["elements"].values) == [5 * 32 + 1, 5 * 32 + 9] == [161, 169]
        assert out["full_length"].scalar() == 256

    def test_empty_set(self):
        inst = encode(
            "idx.common_prefix",
            {"w": 8, "p": 3},
            {"full_length": scalar_column(INT, 256), "elements": idx([])},
        )
        assert all(len(c) == 0 for c in inst.columns.values())
        assert decode(inst)["elements"].values == ()

    def test_upper_half_splits_singles(self):
        fam = {"full_length": scalar_column(INT, 256), "elements": idx([3, 64, 65, 200])}
        inst = encode("idx.common_upper_half", {"w": 8}, fam)
        assert sorted(inst.columns["naive"].values) == [3, 200]
        assert inst.columns["prefix"].values == (4,)  # block 64..79
        assert sorted(decode(inst)["elements"].values) == [3, 64, 65, 200]

    def test_size_bound_spot_check(self):
        from colcirc import representation_size_bits

        rng = random.Random(7)
        w = 10
        n = 1 << w
        for m in (80, 160):
            elems = sorted(rng.sample(range(n), m))
            inst = encode(
                "idx.common_upper_half",
                {"w": w},
                {"full_length": scalar_column(INT, n), "elements": idx(elems)},
            )
            bits = representation_size_bits(inst.columns)
            assert bits <= (m / 2 + (1 << (w // 2))) * w


class TestVariableWidthCompression:
    def test_pvw_slot_layout(self):
        inst = SchemeInstance(
            "pvw",
            {"type": "u8", "period": 2},
            {
                "period": scalar_column(INT, 2),
                "widths": idx([1, 2]),
                "length": scalar_column(INT, 3),
                "data": u8([97, 98, 99, 100, 101, 102]),
            },
        )
        assert verify(inst)
        assert varwidth_elements(decode(inst)) == [(97,), (98,), (99, 100)]

    def test_pvw_period_one_is_per_element(self):
        elements = [(1, 2), (3,), ()]
        inst = encode("pvw", {"type": "u8", "period": 1}, canonical_varwidth(elements, U8))
        assert list(inst.columns["widths"].values) == [2, 1, 0]

    def test_vwdict_fish_and_cat(self):
        words = ["a", "fish", "and", "a", "cat", "and", "a", "fish", "and", "a", "cat"]
        elements = [tuple(w.encode()) for w in words]
        inst = encode("vwdict", {"type": "u8"}, canonical_varwidth(elements, U8))
        assert len(inst.columns["entry_lengths"]) == 4
        assert varwidth_elements(decode(inst)) == elements

    def test_vwdict_constant_string(self):
        inst = SchemeInstance(
            "vwdict",
            {"type": "u8"},
            {
                "indices": idx([0, 0, 0]),
                "entry_start_positions": idx([0]),
                "entry_lengths": idx([2]),
                "entry_data": u8([104, 105]),
            },
        )
        assert varwidth_elements(decode(inst)) == [(104, 105)] * 3

    def test_vwdict_overlapping_entries(self):
        inst = SchemeInstance(
            "vwdict",
            {"type": "u8"},
            {
                "indices": idx([0, 1]),
                "entry_start_positions": idx([0, 1]),
                "entry_lengths": idx([2, 2]),
                "entry_data": u8([97, 98, 99]),
            },
        )
        assert verify(inst)
        assert varwidth_elements(decode(inst)) == [(97, 98), (98, 99)]


class TestWidthShaping:
    def test_expected_width(self):
        assert cs.expected_width(0.25) == 4.0

    def test_expected_max_width_closed_form(self):
        p = 1 - 0.1 ** (1 / 8)
        assert abs(cs.expected_max_width(p, 4) - 7.738) < 5e-3


class TestBatteries:
    COMP_SCHEMES = [
        "constant",
        "generated",
        "generated.poly",
        "noisy.generated",
        "nullsup",
        "dict",
        "dict.unique",
        "dict.monotone",
        "run.full",
        "run.rle",
        "run.rpe",
        "run.rle.capped",
        "spline.generalized",
        "spline.knotted",
        "spline.equiknotted",
        "for",
        "delta.naive",
        "delta",
        "delta.patched",
        "segdict",
        "segdict.two_level",
        "cascade",
        "subdict",
        "idx.common_prefix",
        "idx.common_upper_half",
        "pvw",
        "vwdict",
        "vwdict.unique",
        "vwdict.monotone",
    ]

    @pytest.mark.parametrize("scheme_id", COMP_SCHEMES)
    def test_roundtrip_and_rejection(self, scheme_id):
        rng = random.Random(hash(scheme_id) & 0xFFFF)
        roundtrip_battery(scheme_id, CASES[scheme_id], rng, 25)
        corruption_battery(scheme_id, CASES[scheme_id], rng, 25)
