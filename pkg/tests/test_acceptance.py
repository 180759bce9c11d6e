"""Acceptance criteria, one test per criterion, each printing a verdict line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines as they pass.
"""

import itertools
import random
import time
from fractions import Fraction

import numpy as np

from colcirc import (
    compression_ratio,
    decode,
    encode,
    eliminate_duplicate_vertices,
    evaluate_circuit,
    fuse_subcircuit,
    lift_operator,
    instantiate,
    make_column,
    registered_schemes,
    replace_subcircuit,
    representation_size_bits,
    representation_size_bytes,
    scalar_column,
    validate_circuit,
    verify,
)
from colcirc.builder import CircuitBuilder
from colcirc.comp_schemes import expected_max_width, expected_width
from colcirc.errors import EvaluationError
from colcirc.gallery import double_plus_three, q6_circuit, q6_reference
from colcirc.types import I8, INT, U8, U32, U64

from circuit_gen import convex_closure, random_circuit, random_inputs
from scheme_cases import CASES, corruption_battery, roundtrip_battery

_INT = str(INT)
_fuse_names = itertools.count()


def report(criterion, detail=""):
    print(f"PASS criterion {criterion}" + (f": {detail}" if detail else ""))


def test_criterion_1_worked_example_fidelity():
    started = time.perf_counter()
    c = double_plus_three()
    rng = random.Random(101)
    lo, hi = 0, (1 << 31) - 2  # doubling plus three stays in u32
    for i in range(1000):
        n = rng.randrange(0, 48)
        col = make_column(U32, [rng.randrange(lo, hi) for _ in range(n)])
        parallel = i % 2 == 1  # alternate reference and concurrent evaluation
        out = evaluate_circuit(c, {"col": col}, parallel=parallel)
        assert out["result"].values == tuple(2 * v + 3 for v in col.values)
    # explicit check that both modes agree on the same inputs
    col = make_column(U32, [rng.randrange(lo, hi) for _ in range(64)])
    assert evaluate_circuit(c, {"col": col}) == evaluate_circuit(c, {"col": col}, parallel=True)
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0, f"criterion 1 took {elapsed:.2f}s"
    report(1, f"1000 random u32 columns, both evaluators, {elapsed:.2f}s")


def test_criterion_2_q6_oracle():
    started = time.perf_counter()
    rng = random.Random(102)
    n = 10_000
    shipdate = [rng.randrange(8600, 9300) for _ in range(n)]
    discount = [rng.randrange(0, 11) for _ in range(n)]
    quantity = [rng.randrange(1, 60) for _ in range(n)]
    price = [rng.randrange(100, 1_000_000) for _ in range(n)]
    out = evaluate_circuit(
        q6_circuit(),
        {
            "shipdate": make_column(U64, shipdate),
            "discount": make_column(U64, discount),
            "quantity": make_column(U64, quantity),
            "extended_price": make_column(U64, price),
        },
    )
    expected = q6_reference(shipdate, discount, quantity, price)
    assert out["revenue"].scalar() == expected
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0, f"criterion 2 took {elapsed:.2f}s"
    report(2, f"10000-row revenue {expected} matches the row loop, {elapsed:.2f}s")


def test_criterion_3_universal_roundtrip():
    started = time.perf_counter()
    schemes = registered_schemes()
    builtin = [s for s in schemes if s in CASES]
    assert len(builtin) >= 25
    assert set(CASES) <= set(schemes)
    corrupted_total = 0
    for scheme_id in builtin:
        rng = random.Random(hash(scheme_id) & 0xFFFFFF)
        roundtrip_battery(scheme_id, CASES[scheme_id], rng, 100)
        corrupted_total += corruption_battery(scheme_id, CASES[scheme_id], rng, 100)
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0, f"criterion 3 took {elapsed:.1f}s"
    report(
        3,
        f"{len(builtin)} schemes x 100 roundtrips, {corrupted_total} corruptions rejected, "
        f"{elapsed:.1f}s",
    )


def _identity_gadget_circuit():
    """prefix-sum of the derivative plus the replicated head: the identity."""
    b = CircuitBuilder()
    col = b.noop(b.input("col"), _INT)
    head = b.add("split_first", {"type": _INT}, col=col)["head"]
    head_w = b.cast(_INT, "i64", head)
    diffs = b.add("derivative", {"type": _INT, "out_type": "i64"}, col=col)
    sums = b.prefix("i64", "add", diffs)
    rep = b.replicate("i64", head_w, b.length(sums, "i64"))
    tail = b.add_cols("i64", rep, sums)
    b.output("rebuilt", b.cast("i64", _INT, b.concat("i64", head_w, tail)))
    return b.build()


def test_criterion_4_transformation_semantics():
    started = time.perf_counter()
    rng = random.Random(104)
    done = 0
    while done < 200:
        c = random_circuit(rng, n_inputs=rng.randrange(1, 3), n_steps=rng.randrange(4, 9))
        inputs = random_inputs(rng, c)
        try:
            ref = evaluate_circuit(c, inputs)
        except EvaluationError:
            continue
        subset = convex_closure(c, set(rng.sample(sorted(c.vertices), rng.randrange(1, len(c.vertices) + 1))))
        fused = fuse_subcircuit(c, subset, f"acc4:fused{next(_fuse_names)}")
        assert validate_circuit(fused).ok
        assert evaluate_circuit(fused, inputs) == ref
        deduped = eliminate_duplicate_vertices(c)
        assert validate_circuit(deduped).ok
        assert evaluate_circuit(deduped, inputs) == ref
        done += 1

    # the derivative-then-integrate gadget is replaceable by a relay
    ident = _identity_gadget_circuit()
    relay = lift_operator(instantiate("no_op", {"type": _INT}))
    rho = {
        relay.interface["arguments"]: ident.interface["col"],
        relay.interface["result"]: ident.interface["rebuilt"],
    }
    replaced = replace_subcircuit(ident, set(ident.vertices), relay, rho)
    for _ in range(50):
        vals = [rng.randrange(0, 1000) for _ in range(rng.randrange(1, 40))]
        col = make_column(INT, vals)
        assert evaluate_circuit(ident, {"col": col})["rebuilt"] == col
        assert evaluate_circuit(replaced, {"col": col})["rebuilt"] == col
    elapsed = time.perf_counter() - started
    assert elapsed < 30.0, f"criterion 4 took {elapsed:.1f}s"
    report(4, f"200 fuse/dedup preservations plus the integrate-gadget replacement, {elapsed:.1f}s")


def test_criterion_5_geometric_max_width_expectation():
    p = 1 - 0.1 ** (1 / 8)
    k = 4
    closed_form = expected_max_width(p, k)
    assert abs(closed_form - 7.738) < 5e-3  # the derivation's reported value

    rng = np.random.default_rng(105)
    widths = rng.geometric(p, size=(1_000_000, k))
    mc_max = float(widths.max(axis=1).mean())
    mc_width = float(widths.mean())
    assert abs(mc_max - 7.738) < 0.05
    assert abs(mc_max - closed_form) < 0.05
    assert abs(mc_width - expected_width(p)) < 0.01
    report(5, f"E[Wmax] closed form {closed_form:.4f}, Monte Carlo {mc_max:.4f}; E[W] {mc_width:.4f}")


def test_criterion_6_common_upper_half_size_bound():
    rng = random.Random(106)
    w = 16
    n = 1 << w
    sqrt_n = 1 << (w // 2)
    sizes = [8 * sqrt_n, 10 * sqrt_n, 16 * sqrt_n]
    plan = [sizes[i % 3] for i in range(50)]
    heavy_bits = 0
    heavy_elems = 0
    for m in plan:
        elements = rng.sample(range(n), m)
        inst = encode(
            "idx.common_upper_half",
            {"w": w},
            {"full_length": scalar_column(INT, n), "elements": make_column(INT, elements)},
        )
        assert verify(inst)
        bits = representation_size_bits(inst.columns)
        assert bits <= (m / 2 + sqrt_n) * w, f"m={m}: {bits} bits exceeds the accounting bound"
        if m >= 10 * sqrt_n:
            heavy_bits += bits
            heavy_elems += m
    measured = heavy_bits / heavy_elems
    assert measured < 0.6 * w, f"bits per element {measured:.3f} not below {0.6 * w}"
    report(6, f"50 subsets within the hard bound; {measured:.3f} bits/element < {0.6 * w}")


def test_criterion_7_compressed_form_pushdown():
    started = time.perf_counter()
    rng = random.Random(107)
    for _ in range(100):
        col = make_column(U32, [rng.randrange(0, 7) for _ in range(rng.randrange(0, 60))])
        inst = encode("run.rle", {"type": "u32"}, col)
        compressed_sum = sum(
            v * l for v, l in zip(inst.columns["value"].values, inst.columns["length"].values)
        )
        assert compressed_sum == sum(decode(inst)["col"].values)
    for _ in range(100):
        col = make_column(U32, [rng.randrange(0, 9) for _ in range(rng.randrange(1, 60))])
        inst = encode("dict.unique", {"type": "u32"}, col)
        v = rng.choice(col.values)
        code = list(inst.columns["dictionary"].values).index(v)
        decoded = decode(inst)["col"]
        by_value = [i for i, x in enumerate(decoded.values) if x == v]
        by_code = [i for i, x in enumerate(inst.columns["indices"].values) if x == code]
        assert by_value == by_code
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0, f"criterion 7 took {elapsed:.1f}s"
    report(7, f"100 compressed sums and 100 surrogate selects, {elapsed:.1f}s")


def test_criterion_8_patched_delta_advantage():
    k, M = 4, 127
    assert I8.bounds()[1] == M
    col = make_column(U32, [0] * k + [(k + 1) * M] * (k + 1))
    inst = encode("delta.patched", {"type": "u32", "delta_type": "i8", "segment_length": len(col)}, col)
    assert decode(inst)["col"] == col

    # compressed-domain patches, counted by scanning pairwise differences
    diffs = [col[i + 1] - col[i] for i in range(len(col) - 1)]
    lo, hi = I8.bounds()
    out_of_range = sum(1 for d in diffs if not lo <= d <= hi)
    assert out_of_range == 1
    assert len(inst.columns["patch_pos"]) == 1 and inst.columns["patch_pos"][0] == k

    # minimal decompressed-domain patches: the largest keepable index set
    # where consecutive kept positions stay reachable with in-range steps
    n = len(col)
    best = [1] * n
    for j in range(n):
        for i in range(j):
            gap = j - i
            if lo * gap <= col[j] - col[i] <= hi * gap:
                best[j] = max(best[j], best[i] + 1)
    min_patches = n - max(best)
    assert min_patches >= k
    report(8, f"1 compressed-domain patch vs {min_patches} >= {k} decompressed-domain patches")


def test_criterion_9_size_and_ratio_formulas():
    rng = random.Random(109)
    checked = 0

    def closed_form_check(inst, decoded_bytes, encoded_bytes):
        nonlocal checked
        assert representation_size_bytes(inst.columns) == encoded_bytes
        assert compression_ratio(inst) == Fraction(decoded_bytes, encoded_bytes)
        checked += 1

    for n in (1, 10, 100, 1000, 4096):
        inst = encode("constant", {"type": "u32", "int_type": "u32"}, make_column(U32, [9] * n))
        closed_form_check(inst, 4 * n, 4 + 4)

    for runs in (1, 3, 7, 25, 60):
        values, lengths = [], []
        for r in range(runs):
            lengths.append(rng.randrange(1, 9))
            values.append(r % 200)
        col = make_column(U8, [v for v, l in zip(values, lengths) for _ in range(l)])
        inst = encode("run.rle", {"type": "u8", "int_type": "u32"}, col)
        closed_form_check(inst, len(col), 4 * runs + runs)

    for n, support in ((4, 2), (20, 5), (50, 1), (64, 16), (200, 3)):
        col = make_column(U8, [rng.randrange(0, support) for _ in range(n)])
        d = len(set(col.values))
        inst = encode("dict", {"type": "u8"}, col)
        closed_form_check(inst, n, d + 8 * n)

    for n, ell in ((6, 2), (10, 5), (16, 4), (21, 7), (100, 10)):
        base = [rng.randrange(0, 3000) for _ in range(-(-n // ell))]
        col = make_column(
            U32, [base[i // ell] + rng.randrange(0, 250) for i in range(n)]
        )
        inst = encode("for", {"type": "u32", "offset_type": "u8", "segment_length": ell}, col)
        closed_form_check(inst, 4 * n, 8 + 4 * len(base) + n)

    assert checked == 20
    report(9, "20 hand-built bundles match closed-form sizes and ratios exactly")
