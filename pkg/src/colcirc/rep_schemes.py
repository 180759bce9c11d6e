"""Structural (non-compressing) representation schemes.

Indexed columns, subcolumns and their combinations, segmentations, index
sets, partitions, component de/composition, variable-width columns, and
nullable recipes.  Every decoder is a circuit over catalog operators;
verifiers here are host decision procedures.
"""

from __future__ import annotations

from dataclasses import dataclass

from .builder import CircuitBuilder, expand_ranges
from .codec import SimpleCodec, SchemeInstance, decode, register_codec
from .column import Column, scalar_column
from .errors import NotEncodable, OperatorError
from .types import BIT, INT, ElementType, parse_type

_INT = str(INT)


def _t(params, key="type"):
    return params[key] if isinstance(params[key], str) else str(params[key])


def _et(params, key="type") -> ElementType:
    v = params[key]
    return parse_type(v) if isinstance(v, str) else v


def _is_distinct(values) -> bool:
    return len(set(values)) == len(values)


# -- host-level subcolumn values ------------------------------------------------


@dataclass(frozen=True)
class SubcolumnStd:
    """Standard representation of a subcolumn: paired pos and data columns."""

    pos: Column
    data: Column

    def __post_init__(self):
        if len(self.pos) != len(self.data):
            raise OperatorError("length-mismatch", "pos and data lengths must match")
        if not _is_distinct(self.pos.values):
            raise OperatorError("duplicate-position", "subcolumn positions must be distinct")

    def mapping(self) -> dict:
        return dict(zip(self.pos.values, self.data.values))

    @property
    def is_canonical(self) -> bool:
        return all(a < b for a, b in zip(self.pos.values, self.pos.values[1:]))

    def canonical(self) -> "SubcolumnStd":
        items = sorted(self.mapping().items())
        return SubcolumnStd(
            Column(self.pos.element_type, [p for p, _ in items]),
            Column(self.data.element_type, [d for _, d in items]),
        )


def subcolumn_overlay(sc1: SubcolumnStd, sc2: SubcolumnStd) -> SubcolumnStd:
    """Partial function agreeing with sc2 on its domain, sc1 elsewhere."""
    merged = sc1.mapping()
    merged.update(sc2.mapping())
    items = sorted(merged.items())
    return SubcolumnStd(
        Column(sc1.pos.element_type, [p for p, _ in items]),
        Column(sc1.data.element_type, [d for _, d in items]),
    )


def subcolumn_union(sc1: SubcolumnStd, sc2: SubcolumnStd) -> SubcolumnStd:
    m1, m2 = sc1.mapping(), sc2.mapping()
    for p in set(m1) & set(m2):
        if m1[p] != m2[p]:
            raise OperatorError(
                "incompatible-subcolumns", f"subcolumns disagree at index {p}: {m1[p]!r} vs {m2[p]!r}"
            )
    return subcolumn_overlay(sc1, sc2)


def subcolumn_family_equivalent(params, a: dict, b: dict) -> bool:
    """Same partial function: canonicalize both sides, then compare."""

    def canon(fam):
        return SubcolumnStd(fam["pos"], fam["data"]).canonical()

    return canon(a) == canon(b)


# -- scheme helpers ---------------------------------------------------------------


def _relay_inputs(b: CircuitBuilder, spec: dict) -> dict:
    """NoOp every encoded-form input; returns label -> Wire for fan-out."""
    return {label: b.noop(b.input(label), str(t)) for label, t in spec.items()}


def _membership_bitmap(b: CircuitBuilder, domain_size, pos):
    """Bit column of ``domain_size`` with ones at the given positions."""
    zeros = b.replicate("bit", b.scalar("bit", 0), domain_size)
    ones = b.replicate("bit", b.scalar("bit", 1), b.length(pos, _INT))
    return b.scatter("bit", zeros, pos, ones)


def _with_noop_tail(b: CircuitBuilder, outputs: dict) -> None:
    for label, wire in outputs.items():
        b.output(label, wire)


# -- Indexed ----------------------------------------------------------------------


def _indexed_decoder(params):
    t = _t(params)
    b = CircuitBuilder()
    permuted = b.add("permute", {"type": t}, permutation=b.input("pos"), data=b.input("data"))
    b.result("col", b.noop(permuted, t))
    return b.build()


def _indexed_verify(params, cols):
    pos, data = cols["pos"], cols["data"]
    if len(pos) != len(data):
        return False
    return sorted(pos.values) == list(range(len(pos)))


def _indexed_encode(params, family):
    col = family["col"]
    et = _et(params)
    if col.element_type != et:
        raise NotEncodable(f"expected a {et} column")
    return {"pos": Column(INT, range(len(col))), "data": col}


register_codec(
    SimpleCodec(
        "indexed",
        form_spec=lambda p: {"pos": INT, "data": _et(p)},
        decoded_labels=lambda p: ["col"],
        build_decoder=_indexed_decoder,
        encode=_indexed_encode,
        host_verify=_indexed_verify,
        encoded_lengths=lambda p, n: {"pos": n, "data": n},
    )
)


# -- subcolumn schemes ---------------------------------------------------------------


def _subcol_std_decoder(params):
    t = _t(params)
    b = CircuitBuilder()
    b.result("pos", b.noop(b.input("pos"), _INT))
    b.result("data", b.noop(b.input("data"), t))
    return b.build()


def _subcol_std_verify(params, cols):
    return len(cols["pos"]) == len(cols["data"]) and _is_distinct(cols["pos"].values)


def _subcol_std_encode(params, family):
    sc = SubcolumnStd(family["pos"], family["data"]).canonical()
    return {"pos": sc.pos, "data": sc.data}


register_codec(
    SimpleCodec(
        "subcolumn.std",
        form_spec=lambda p: {"pos": INT, "data": _et(p)},
        decoded_labels=lambda p: ["pos", "data"],
        build_decoder=_subcol_std_decoder,
        encode=_subcol_std_encode,
        host_verify=_subcol_std_verify,
        equivalent=subcolumn_family_equivalent,
    )
)


def _two_subcolumn_spec(params):
    t = _et(params)
    return {"pos_1": INT, "data_1": t, "pos_2": INT, "data_2": t}


def _overlay_decoder(params):
    t = _t(params)
    b = CircuitBuilder()
    pos1 = b.noop(b.input("pos_1"), _INT)
    data1 = b.noop(b.input("data_1"), t)
    pos2 = b.noop(b.input("pos_2"), _INT)
    data2 = b.noop(b.input("data_2"), t)
    # bound on the domain so membership can be materialized densely
    zero = b.scalar(_INT, 0)
    all_pos = b.concat(_INT, zero, pos1, pos2)
    running_max = b.prefix(_INT, "max", all_pos)
    maxv = b.last_element(_INT, running_max)
    m = b.add_cols(_INT, maxv, b.scalar(_INT, 1))
    membership = _membership_bitmap(b, m, pos2)
    in_second = b.gather("bit", pos1, membership)
    keep = b.ew("not", {}, arguments=in_second)
    kept_pos = b.add("select", {"type": _INT}, data=pos1, selection=keep)
    kept_data = b.add("select", {"type": t}, data=data1, selection=keep)
    b.result("pos", b.concat(_INT, kept_pos, pos2))
    b.result("data", b.concat(t, kept_data, data2))
    return b.build()


def _overlay_verify(params, cols):
    return (
        len(cols["pos_1"]) == len(cols["data_1"])
        and len(cols["pos_2"]) == len(cols["data_2"])
        and _is_distinct(cols["pos_1"].values)
        and _is_distinct(cols["pos_2"].values)
    )


def _overlay_encode(params, family):
    # canonical encoded form: the subcolumn itself plus an empty overlay
    sc = SubcolumnStd(family["pos"], family["data"]).canonical()
    t = _et(params)
    return {
        "pos_1": sc.pos,
        "data_1": sc.data,
        "pos_2": Column(INT, []),
        "data_2": Column(t, []),
    }


register_codec(
    SimpleCodec(
        "subcolumn.overlay",
        form_spec=_two_subcolumn_spec,
        decoded_labels=lambda p: ["pos", "data"],
        build_decoder=_overlay_decoder,
        encode=_overlay_encode,
        host_verify=_overlay_verify,
        equivalent=subcolumn_family_equivalent,
    )
)


def _disjoint_union_decoder(params):
    t = _t(params)
    b = CircuitBuilder()
    b.result("pos", b.concat(_INT, b.input("pos_1"), b.input("pos_2")))
    b.result("data", b.concat(t, b.input("data_1"), b.input("data_2")))
    return b.build()


def _disjoint_union_verify(params, cols):
    if not _overlay_verify(params, cols):
        return False
    return not (set(cols["pos_1"].values) & set(cols["pos_2"].values))


def _disjoint_union_encode(params, family):
    sc = SubcolumnStd(family["pos"], family["data"]).canonical()
    t = _et(params)
    return {"pos_1": sc.pos, "data_1": sc.data, "pos_2": Column(INT, []), "data_2": Column(t, [])}


register_codec(
    SimpleCodec(
        "subcolumn.union.disjoint",
        form_spec=_two_subcolumn_spec,
        decoded_labels=lambda p: ["pos", "data"],
        build_decoder=_disjoint_union_decoder,
        encode=_disjoint_union_encode,
        host_verify=_disjoint_union_verify,
        equivalent=subcolumn_family_equivalent,
    )
)


# -- full-column schemes from subcolumn combinations ----------------------------------


def _complementing_decoder(params):
    t = _t(params)
    b = CircuitBuilder()
    pos = b.noop(b.input("pos"), _INT)
    data1 = b.noop(b.input("data_1"), t)
    data2 = b.noop(b.input("data_2"), t)
    n = b.add_cols(_INT, b.length(data1, t), b.length(data2, t))
    membership = _membership_bitmap(b, n, pos)
    complement = b.add("select_indices", {}, characteristic=b.ew("not", {}, arguments=membership))
    base = b.replicate(t, b.scalar(t, _et(params).zero()), n)
    first = b.scatter(t, base, pos, data1)
    b.result("col", b.scatter(t, first, complement, data2))
    return b.build()


def _complementing_verify(params, cols):
    pos, d1, d2 = cols["pos"], cols["data_1"], cols["data_2"]
    n = len(d1) + len(d2)
    if len(pos) != len(d1) or not _is_distinct(pos.values):
        return False
    return all(p < n for p in pos.values)


def _complementing_encode(params, family):
    col = family["col"]
    # canonical choice: first subcolumn empty, everything in the complement
    t = _et(params)
    return {"pos": Column(INT, []), "data_1": Column(t, []), "data_2": col}


register_codec(
    SimpleCodec(
        "column.complementing",
        form_spec=lambda p: {"pos": INT, "data_1": _et(p), "data_2": _et(p)},
        decoded_labels=lambda p: ["col"],
        build_decoder=_complementing_decoder,
        encode=_complementing_encode,
        host_verify=_complementing_verify,
    )
)


def _overlaid_decoder(params):
    t = _t(params)
    b = CircuitBuilder()
    out = b.scatter(t, b.input("data"), b.input("overlay_pos"), b.input("overlay_data"))
    b.result("col", b.noop(out, t))
    return b.build()


def _overlaid_verify(params, cols):
    pos = cols["overlay_pos"]
    if len(pos) != len(cols["overlay_data"]) or not _is_distinct(pos.values):
        return False
    return all(p < len(cols["data"]) for p in pos.values)


def _overlaid_encode(params, family):
    return {
        "data": family["col"],
        "overlay_pos": Column(INT, []),
        "overlay_data": Column(_et(params), []),
    }


register_codec(
    SimpleCodec(
        "column.overlaid",
        form_spec=lambda p: {"data": _et(p), "overlay_pos": INT, "overlay_data": _et(p)},
        decoded_labels=lambda p: ["col"],
        build_decoder=_overlaid_decoder,
        encode=_overlaid_encode,
        host_verify=_overlaid_verify,
    )
)


# -- segmentations ---------------------------------------------------------------------


def _segmentation_ok(start, length, n=None):
    m = len(start)
    if m != len(length) or m == 0:
        return False
    if start[0] != 0:
        return False
    for i in range(1, m):
        if start[i] != start[i - 1] + length[i - 1]:
            return False
    total = start[m - 1] + length[m - 1]
    return total == n if n is not None else True


def _segmentation_decoder(params):
    b = CircuitBuilder()
    start = b.noop(b.input("start"), _INT)
    length = b.noop(b.input("length"), _INT)
    ends = b.add_cols(_INT, start, length)
    n = b.last_element(_INT, ends)
    b.result("col", b.iota(n))
    return b.build()


def _segmentation_encode(params, family):
    col = family["col"]
    if list(col.values) != list(range(len(col))):
        raise NotEncodable("segmentations represent identity columns only")
    return {"start": Column(INT, [0]), "length": Column(INT, [len(col)])}


register_codec(
    SimpleCodec(
        "segmentation",
        form_spec=lambda p: {"start": INT, "length": INT},
        decoded_labels=lambda p: ["col"],
        build_decoder=_segmentation_decoder,
        encode=_segmentation_encode,
        host_verify=lambda p, cols: _segmentation_ok(cols["start"].values, cols["length"].values),
    )
)


def _uniform_segmentation_decoder(params):
    b = CircuitBuilder()
    b.sink(b.input("segment_length"), _INT)
    b.result("col", b.iota(b.noop(b.input("overall_length"), _INT)))
    return b.build()


def _uniform_segmentation_encode(params, family):
    col = family["col"]
    if list(col.values) != list(range(len(col))):
        raise NotEncodable("segmentations represent identity columns only")
    ell = int(params.get("segment_length", max(1, len(col))))
    return {"segment_length": scalar_column(INT, ell), "overall_length": scalar_column(INT, len(col))}


register_codec(
    SimpleCodec(
        "segmentation.uniform",
        form_spec=lambda p: {"segment_length": INT, "overall_length": INT},
        decoded_labels=lambda p: ["col"],
        build_decoder=_uniform_segmentation_decoder,
        encode=_uniform_segmentation_encode,
        host_verify=lambda p, cols: len(cols["segment_length"]) == 1
        and len(cols["overall_length"]) == 1
        and cols["segment_length"][0] >= 1,
    )
)


def _segmented_decoder(params):
    t = _t(params)
    b = CircuitBuilder()
    b.sink(b.input("segment_start_pos"), _INT)
    b.sink(b.input("segment_length"), _INT)
    b.result("col", b.noop(b.input("data"), t))
    return b.build()


def _segmented_encode(params, family):
    col = family["col"]
    return {
        "data": col,
        "segment_start_pos": Column(INT, [0]),
        "segment_length": Column(INT, [len(col)]),
    }


register_codec(
    SimpleCodec(
        "segmented",
        form_spec=lambda p: {"data": _et(p), "segment_start_pos": INT, "segment_length": INT},
        decoded_labels=lambda p: ["col"],
        build_decoder=_segmented_decoder,
        encode=_segmented_encode,
        host_verify=lambda p, cols: _segmentation_ok(
            cols["segment_start_pos"].values, cols["segment_length"].values, len(cols["data"])
        ),
    )
)


def _uniformly_segmented_decoder(params):
    t = _t(params)
    b = CircuitBuilder()
    b.sink(b.input("segment_length"), _INT)
    b.result("col", b.noop(b.input("data"), t))
    return b.build()


def _uniformly_segmented_encode(params, family):
    ell = int(params.get("segment_length", 1))
    return {"data": family["col"], "segment_length": scalar_column(INT, ell)}


register_codec(
    SimpleCodec(
        "segmented.uniform",
        form_spec=lambda p: {"data": _et(p), "segment_length": INT},
        decoded_labels=lambda p: ["col"],
        build_decoder=_uniformly_segmented_decoder,
        encode=_uniformly_segmented_encode,
        host_verify=lambda p, cols: len(cols["segment_length"]) == 1 and cols["segment_length"][0] >= 1,
    )
)


def _segmented_subcolumn_decoder(params):
    t = _t(params)
    ell = int(params["segment_length"])
    b = CircuitBuilder()
    b.sink(b.input("segment_length"), _INT)
    segment_pos = b.noop(b.input("segment_pos"), _INT)
    data = b.noop(b.input("data"), t)
    n = b.length(data, t)
    idx = b.iota(n)
    seg = b.ew("clip_by", {"type": _INT, "k": ell}, arguments=idx)
    seg_base = b.gather(_INT, seg, segment_pos)
    base = b.ew("scale", {"type": _INT, "k": ell}, arguments=seg_base)
    offset = b.sub_cols(_INT, idx, b.ew("scale", {"type": _INT, "k": ell}, arguments=seg))
    b.result("pos", b.add_cols(_INT, base, offset))
    b.result("data", data)
    return b.build()


def _segmented_subcolumn_verify(params, cols):
    ell = int(params["segment_length"])
    if ell < 1 or len(cols["segment_length"]) != 1 or cols["segment_length"][0] != ell:
        return False
    n = len(cols["data"])
    segs = cols["segment_pos"].values
    if len(segs) != -(-n // ell):
        return False
    if not _is_distinct(segs):
        return False
    if n % ell and segs[-1] != max(segs):
        return False  # slack participates only as the maximal position
    return True


def _segmented_subcolumn_encode(params, family):
    ell = int(params["segment_length"])
    sc = SubcolumnStd(family["pos"], family["data"]).canonical()
    pos = sc.pos.values
    segs, data_order = [], []
    i = 0
    while i < len(pos):
        seg = pos[i] // ell
        run = [p for p in pos[i : i + ell] if p // ell == seg]
        expected = list(range(seg * ell, seg * ell + len(run)))
        if list(run) != expected:
            raise NotEncodable(f"domain does not respect the {ell}-segmentation near index {pos[i]}")
        if len(run) < ell and any(p // ell > seg for p in pos):
            raise NotEncodable("a short segment is only allowed at the maximal position")
        segs.append(seg)
        data_order.extend(sc.data.values[i : i + len(run)])
        i += len(run)
    return {
        "segment_length": scalar_column(INT, ell),
        "segment_pos": Column(INT, segs),
        "data": Column(sc.data.element_type, data_order),
    }


register_codec(
    SimpleCodec(
        "subcolumn.segmented",
        form_spec=lambda p: {"segment_length": INT, "segment_pos": INT, "data": _et(p)},
        decoded_labels=lambda p: ["pos", "data"],
        build_decoder=_segmented_subcolumn_decoder,
        encode=_segmented_subcolumn_encode,
        host_verify=_segmented_subcolumn_verify,
        equivalent=subcolumn_family_equivalent,
    )
)


# -- index sets ------------------------------------------------------------------------


def indexset_equivalent(params, a, b):
    return (
        a["full_length"].values == b["full_length"].values
        and sorted(a["elements"].values) == sorted(b["elements"].values)
    )


def _sparse_indexset_decoder(params):
    b = CircuitBuilder()
    full = b.noop(b.input("full_length"), _INT)
    elements = b.noop(b.input("elements"), _INT)
    membership = _membership_bitmap(b, full, elements)
    b.result("full_length", full)
    b.result("elements", b.add("select_indices", {}, characteristic=membership))
    return b.build()


def _sparse_indexset_verify(params, cols):
    full = cols["full_length"]
    if len(full) != 1:
        return False
    n = full[0]
    vals = cols["elements"].values
    return _is_distinct(vals) and all(v < n for v in vals)


def _sparse_indexset_encode(params, family):
    n = family["full_length"].scalar()
    vals = sorted(family["elements"].values)
    if any(v >= n for v in vals) or not _is_distinct(vals):
        raise NotEncodable("index set elements must be distinct and below full_length")
    return {"full_length": scalar_column(INT, n), "elements": Column(INT, vals)}


register_codec(
    SimpleCodec(
        "indexset.sparse",
        form_spec=lambda p: {"full_length": INT, "elements": INT},
        decoded_labels=lambda p: ["full_length", "elements"],
        build_decoder=_sparse_indexset_decoder,
        encode=_sparse_indexset_encode,
        host_verify=_sparse_indexset_verify,
        equivalent=indexset_equivalent,
    )
)


def _dense_indexset_decoder(params):
    b = CircuitBuilder()
    char = b.noop(b.input("characteristic"), "bit")
    b.result("full_length", b.length(char, "bit"))
    b.result("elements", b.add("select_indices", {}, characteristic=char))
    return b.build()


def _dense_indexset_encode(params, family):
    n = family["full_length"].scalar()
    members = set(family["elements"].values)
    if any(v >= n for v in members):
        raise NotEncodable("index set elements must be below full_length")
    return {"characteristic": Column(BIT, [1 if i in members else 0 for i in range(n)])}


register_codec(
    SimpleCodec(
        "indexset.dense",
        form_spec=lambda p: {"characteristic": BIT},
        decoded_labels=lambda p: ["full_length", "elements"],
        build_decoder=_dense_indexset_decoder,
        encode=_dense_indexset_encode,
        host_verify=lambda p, cols: True,
        equivalent=indexset_equivalent,
    )
)


def _contiguous_indexset_decoder(params):
    b = CircuitBuilder()
    start = b.noop(b.input("start"), _INT)
    length = b.noop(b.input("length"), _INT)
    full = b.noop(b.input("full_length"), _INT)
    base = b.iota(length)
    shift = b.replicate(_INT, start, length)
    b.result("full_length", full)
    b.result("elements", b.add_cols(_INT, base, shift))
    return b.build()


def _contiguous_indexset_verify(params, cols):
    if any(len(cols[k]) != 1 for k in ("start", "length", "full_length")):
        return False
    return cols["start"][0] + cols["length"][0] <= cols["full_length"][0]


def _contiguous_indexset_encode(params, family):
    n = family["full_length"].scalar()
    vals = sorted(family["elements"].values)
    if vals and vals != list(range(vals[0], vals[0] + len(vals))):
        raise NotEncodable("index set is not contiguous")
    start = vals[0] if vals else 0
    if start + len(vals) > n:
        raise NotEncodable("range exceeds full_length")
    return {
        "start": scalar_column(INT, start),
        "length": scalar_column(INT, len(vals)),
        "full_length": scalar_column(INT, n),
    }


register_codec(
    SimpleCodec(
        "indexset.contiguous",
        form_spec=lambda p: {"start": INT, "length": INT, "full_length": INT},
        decoded_labels=lambda p: ["full_length", "elements"],
        build_decoder=_contiguous_indexset_decoder,
        encode=_contiguous_indexset_encode,
        host_verify=_contiguous_indexset_verify,
        equivalent=indexset_equivalent,
    )
)


# -- partitions -------------------------------------------------------------------------


def _partition_k(params) -> int:
    return int(params["k"])


def _partition_decoder(params):
    k = _partition_k(params)
    b = CircuitBuilder()
    part = b.noop(b.input("partition"), _INT)
    for j in range(k):
        match = b.ew("const_compare", {"type": _INT, "cmp": "eq", "value": j}, arguments=part)
        pos = b.add("select_indices", {}, characteristic=match)
        b.result(f"pos_{j + 1}", pos)
        b.result(f"data_{j + 1}", b.noop(pos, _INT))
    return b.build()


def _partition_verify(params, cols):
    k = _partition_k(params)
    return all(v < k for v in cols["partition"].values)


def _partition_encode(params, family):
    k = _partition_k(params)
    n = None
    assignment = {}
    for j in range(k):
        pos = family[f"pos_{j + 1}"].values
        for p in pos:
            if p in assignment:
                raise NotEncodable(f"index {p} appears in two parts")
            assignment[p] = j
    n = len(assignment)
    if sorted(assignment) != list(range(n)):
        raise NotEncodable("parts must cover the index range without gaps")
    return {"partition": Column(INT, [assignment[i] for i in range(n)])}


def _partition_equivalent(params, a, b):
    k = _partition_k(params)

    def parts(fam):
        return [tuple(sorted(fam[f"pos_{j + 1}"].values)) for j in range(k)]

    return parts(a) == parts(b)


register_codec(
    SimpleCodec(
        "partition",
        form_spec=lambda p: {"partition": INT},
        decoded_labels=lambda p: [
            label for j in range(_partition_k(p)) for label in (f"pos_{j + 1}", f"data_{j + 1}")
        ],
        build_decoder=_partition_decoder,
        encode=_partition_encode,
        host_verify=_partition_verify,
        equivalent=_partition_equivalent,
    )
)


def _partitioned_k_spec(params):
    k = _partition_k(params)
    t = _et(params)
    spec = {}
    for j in range(k):
        spec[f"pos_{j + 1}"] = INT
        spec[f"data_{j + 1}"] = t
    return spec


def _partitioned_k_decoder(params):
    k = _partition_k(params)
    t = _t(params)
    b = CircuitBuilder()
    poss = [b.noop(b.input(f"pos_{j + 1}"), _INT) for j in range(k)]
    datas = [b.noop(b.input(f"data_{j + 1}"), t) for j in range(k)]
    n = b.length(poss[0], _INT)
    for j in range(1, k):
        n = b.add_cols(_INT, n, b.length(poss[j], _INT))
    out = b.replicate(t, b.scalar(t, _et(params).zero()), n)
    for j in range(k):
        out = b.scatter(t, out, poss[j], datas[j])
    b.result("col", out)
    return b.build()


def _partitioned_k_verify(params, cols):
    k = _partition_k(params)
    seen = set()
    total = 0
    for j in range(k):
        pos = cols[f"pos_{j + 1}"].values
        if len(pos) != len(cols[f"data_{j + 1}"]):
            return False
        if seen & set(pos):
            return False
        seen |= set(pos)
        total += len(pos)
    return sorted(seen) == list(range(total))


def _partitioned_k_encode(params, family):
    k = _partition_k(params)
    col = family["col"]
    partition = params.get("partition")
    n = len(col)
    if partition is None:
        assignment = [0] * n  # canonical default: everything in part 1
    else:
        assignment = list(partition)
        if len(assignment) != n or any(j >= k for j in assignment):
            raise NotEncodable("partition assignment does not match the column")
    out = {}
    for j in range(k):
        idxs = [i for i in range(n) if assignment[i] == j]
        out[f"pos_{j + 1}"] = Column(INT, idxs)
        out[f"data_{j + 1}"] = Column(col.element_type, [col[i] for i in idxs])
    return out


register_codec(
    SimpleCodec(
        "partition.k",
        form_spec=_partitioned_k_spec,
        decoded_labels=lambda p: ["col"],
        build_decoder=_partitioned_k_decoder,
        encode=_partitioned_k_encode,
        host_verify=_partitioned_k_verify,
        normalize_params=lambda p: {key: v for key, v in p.items() if key != "partition"},
    )
)


def partition_materialize(partition: Column, k: int) -> list:
    """The decode direction of the partition scheme: k index subcolumns."""
    inst = SchemeInstance("partition", {"k": k}, {"partition": partition})
    out = decode(inst)
    return [SubcolumnStd(out[f"pos_{j + 1}"], out[f"data_{j + 1}"]) for j in range(k)]


def canonical_partition(partition: Column) -> Column:
    """Squeeze out empty part ids, preserving part order."""
    seen = sorted(set(partition.values))
    remap = {v: i for i, v in enumerate(seen)}
    return Column(partition.element_type, [remap[v] for v in partition.values])


# -- components -------------------------------------------------------------------------


def _components_types(params):
    return [parse_type(t) if isinstance(t, str) else t for t in params["types"]]


def _components_decoder(params):
    types = _components_types(params)
    b = CircuitBuilder()
    wired = {
        f"component_{i + 1}": b.noop(b.input(f"component_{i + 1}"), str(t))
        for i, t in enumerate(types)
    }
    zipped = b.add("zip", {"types": [str(t) for t in types]}, **wired)
    b.result("zipped", zipped)
    return b.build()


def _components_verify(params, cols):
    lengths = {len(c) for c in cols.values()}
    return len(lengths) <= 1


def _components_encode(params, family):
    types = _components_types(params)
    zipped = family["zipped"]
    columns = [[] for _ in types]
    for v in zipped.values:
        for i, item in enumerate(v):
            columns[i].append(item)
    return {f"component_{i + 1}": Column(types[i], columns[i]) for i in range(len(types))}


register_codec(
    SimpleCodec(
        "components",
        form_spec=lambda p: {
            f"component_{i + 1}": t for i, t in enumerate(_components_types(p))
        },
        decoded_labels=lambda p: ["zipped"],
        build_decoder=_components_decoder,
        encode=_components_encode,
        host_verify=_components_verify,
    )
)


def _concat_components_decoder(params):
    k = int(params["k"])
    t = _t(params)
    b = CircuitBuilder()
    comp = b.add(
        "compose_segments",
        {"type": t, "k": k},
        segment_length=b.input("segment_length"),
        components=b.input("components"),
    )
    b.result("composed", b.noop(comp, str(ElementType.product(*([_et(params)] * k)))))
    return b.build()


def _concat_components_verify(params, cols):
    k = int(params["k"])
    if len(cols["segment_length"]) != 1:
        return False
    ell = cols["segment_length"][0]
    return len(cols["components"]) == ell * k


def _concat_components_encode(params, family):
    k = int(params["k"])
    zipped = family["composed"]
    t = _et(params)
    parts = [[v[j] for v in zipped.values] for j in range(k)]
    flat = [x for part in parts for x in part]
    return {
        "segment_length": scalar_column(INT, len(zipped)),
        "components": Column(t, flat),
    }


register_codec(
    SimpleCodec(
        "components.concatenated",
        form_spec=lambda p: {"segment_length": INT, "components": _et(p)},
        decoded_labels=lambda p: ["composed"],
        build_decoder=_concat_components_decoder,
        encode=_concat_components_encode,
        host_verify=_concat_components_verify,
    )
)


def _shattered_decoder(params):
    k = int(params["k"])
    t = _t(params)
    b = CircuitBuilder()
    comp = b.add(
        "assemble",
        {"type": t, "k": k},
        segment_length=b.input("segment_length"),
        components=b.input("components"),
    )
    b.result("composed", b.noop(comp, str(ElementType.product(*([_et(params)] * k)))))
    return b.build()


def _shattered_verify(params, cols):
    k = int(params["k"])
    if len(cols["segment_length"]) != 1 or cols["segment_length"][0] != k:
        return False
    return len(cols["components"]) % k == 0


def _shattered_encode(params, family):
    k = int(params["k"])
    zipped = family["composed"]
    t = _et(params)
    flat = [x for v in zipped.values for x in v]
    return {"segment_length": scalar_column(INT, k), "components": Column(t, flat)}


register_codec(
    SimpleCodec(
        "components.shattered",
        form_spec=lambda p: {"segment_length": INT, "components": _et(p)},
        decoded_labels=lambda p: ["composed"],
        build_decoder=_shattered_decoder,
        encode=_shattered_encode,
        host_verify=_shattered_verify,
    )
)


def _value_indicators_decoder(params):
    d = int(params["domain_size"])
    b = CircuitBuilder()
    b.sink(b.input("domain_size"), _INT)
    bitmaps = b.noop(b.input("bitmaps"), "bit")
    total = b.length(bitmaps, "bit")
    n = b.ew("clip_by", {"type": _INT, "k": d}, arguments=total)
    acc = None
    for j in range(d):
        offset = b.ew("scale", {"type": _INT, "k": j}, arguments=n)  # scalar j*n
        idx = b.add_cols(_INT, b.iota(n), b.replicate(_INT, offset, n))
        seg = b.gather("bit", idx, bitmaps)
        wide = b.cast("bit", _INT, seg)
        term = b.ew("scale", {"type": _INT, "k": j}, arguments=wide)
        acc = term if acc is None else b.add_cols(_INT, acc, term)
    b.result("col", acc if acc is not None else b.iota(b.scalar(_INT, 0)))
    return b.build()


def _value_indicators_verify(params, cols):
    d = int(params["domain_size"])
    if len(cols["domain_size"]) != 1 or cols["domain_size"][0] != d:
        return False
    bits = cols["bitmaps"].values
    if len(bits) % d:
        return False
    n = len(bits) // d
    return all(sum(bits[j * n + i] for j in range(d)) == 1 for i in range(n))


def _value_indicators_encode(params, family):
    d = int(params["domain_size"])
    col = family["col"]
    if any(v >= d for v in col.values):
        raise NotEncodable(f"value outside the {d}-value domain")
    n = len(col)
    bits = [0] * (n * d)
    for i, v in enumerate(col.values):
        bits[v * n + i] = 1
    return {"domain_size": scalar_column(INT, d), "bitmaps": Column(BIT, bits)}


register_codec(
    SimpleCodec(
        "value.indicators",
        form_spec=lambda p: {"domain_size": INT, "bitmaps": BIT},
        decoded_labels=lambda p: ["col"],
        build_decoder=_value_indicators_decoder,
        encode=_value_indicators_encode,
        host_verify=_value_indicators_verify,
    )
)


# -- variable-width columns ----------------------------------------------------------------


def varwidth_elements(family: dict) -> list:
    """Element list view: tuple of base values per element."""
    start = family["start_position"].values
    length = family["length"].values
    data = family["data"].values
    return [tuple(data[start[i] : start[i] + length[i]]) for i in range(len(start))]


def varwidth_equivalent(params, a, b):
    return (
        varwidth_elements(a) == varwidth_elements(b)
        and a["data"].element_type == b["data"].element_type
    )


def canonical_varwidth(elements, base_type: ElementType) -> dict:
    starts, lengths, data = [], [], []
    at = 0
    for e in elements:
        starts.append(at)
        lengths.append(len(e))
        data.extend(e)
        at += len(e)
    return {
        "start_position": Column(INT, starts),
        "length": Column(INT, lengths),
        "data": Column(base_type, data),
    }


def _varwidth_std_decoder(params):
    t = _t(params)
    b = CircuitBuilder()
    starts = b.noop(b.input("start_position"), _INT)
    lengths = b.noop(b.input("length"), _INT)
    data = b.noop(b.input("data"), t)
    out_starts, out_data = expand_ranges(b, t, starts, lengths, data)
    b.result("start_position", out_starts)
    b.result("length", b.noop(lengths, _INT))
    b.result("data", out_data)
    return b.build()


def _varwidth_std_verify(params, cols):
    starts = cols["start_position"].values
    lengths = cols["length"].values
    if len(starts) != len(lengths):
        return False
    n_data = len(cols["data"])
    return all(s + l <= n_data for s, l in zip(starts, lengths))


def _varwidth_std_encode(params, family):
    if not _varwidth_std_verify(params, family):
        raise NotEncodable("element ranges must lie within the data column")
    return canonical_varwidth(varwidth_elements(family), family["data"].element_type)


register_codec(
    SimpleCodec(
        "varwidth.std",
        form_spec=lambda p: {"start_position": INT, "length": INT, "data": _et(p)},
        decoded_labels=lambda p: ["start_position", "length", "data"],
        build_decoder=_varwidth_std_decoder,
        encode=_varwidth_std_encode,
        host_verify=_varwidth_std_verify,
        equivalent=varwidth_equivalent,
    )
)


def _capped_width_decoder(params):
    t = _t(params)
    b = CircuitBuilder()
    max_len = b.noop(b.input("max_length"), _INT)
    lengths = b.noop(b.input("lengths"), _INT)
    data = b.noop(b.input("data"), t)
    n = b.length(lengths, _INT)
    slot = b.replicate(_INT, max_len, n)
    starts = b.ew("mul", {"type": _INT}, lhs=b.iota(n), rhs=slot)
    out_starts, out_data = expand_ranges(b, t, starts, lengths, data)
    b.result("start_position", out_starts)
    b.result("length", b.noop(lengths, _INT))
    b.result("data", out_data)
    return b.build()


def _capped_width_verify(params, cols):
    if len(cols["max_length"]) != 1:
        return False
    m = cols["max_length"][0]
    lengths = cols["lengths"].values
    if any(l > m for l in lengths):
        return False
    return len(cols["data"]) == m * len(lengths)


def _capped_width_encode(params, family):
    elements = varwidth_elements(family)
    base = family["data"].element_type
    m = int(params.get("max_length", max((len(e) for e in elements), default=1) or 1))
    if m < 1:
        raise NotEncodable("max_length must be positive")
    filler = base.zero()
    data, lengths = [], []
    for e in elements:
        if len(e) > m:
            raise NotEncodable(f"element of width {len(e)} exceeds the cap {m}")
        lengths.append(len(e))
        data.extend(e)
        data.extend([filler] * (m - len(e)))
    return {
        "max_length": scalar_column(INT, m),
        "lengths": Column(INT, lengths),
        "data": Column(base, data),
    }


register_codec(
    SimpleCodec(
        "varwidth.capped",
        form_spec=lambda p: {"max_length": INT, "lengths": INT, "data": _et(p)},
        decoded_labels=lambda p: ["start_position", "length", "data"],
        build_decoder=_capped_width_decoder,
        encode=_capped_width_encode,
        host_verify=_capped_width_verify,
        equivalent=varwidth_equivalent,
    )
)


# -- nullable recipes ----------------------------------------------------------------------


def _nullable_complementing_decoder(params):
    t = _t(params)
    b = CircuitBuilder()
    pos = b.noop(b.input("pos"), _INT)
    data = b.noop(b.input("data"), t)
    n = b.noop(b.input("length"), _INT)
    null_value = b.noop(b.input("null_value"), t)
    base = b.replicate(t, null_value, n)
    b.result("col", b.scatter(t, base, pos, data))
    return b.build()


def _nullable_complementing_verify(params, cols):
    if len(cols["length"]) != 1 or len(cols["null_value"]) != 1:
        return False
    n = cols["length"][0]
    pos = cols["pos"].values
    return len(pos) == len(cols["data"]) and _is_distinct(pos) and all(p < n for p in pos)


def _nullable_complementing_encode(params, family):
    col = family["col"]
    null_value = params["null_value"]
    idx = [i for i, v in enumerate(col.values) if v != null_value]
    return {
        "pos": Column(INT, idx),
        "data": Column(col.element_type, [col[i] for i in idx]),
        "length": scalar_column(INT, len(col)),
        "null_value": scalar_column(col.element_type, null_value),
    }


register_codec(
    SimpleCodec(
        "nullable.complementing",
        form_spec=lambda p: {"pos": INT, "data": _et(p), "length": INT, "null_value": _et(p)},
        decoded_labels=lambda p: ["col"],
        build_decoder=_nullable_complementing_decoder,
        encode=_nullable_complementing_encode,
        host_verify=_nullable_complementing_verify,
    )
)


def _nullable_patched_decoder(params):
    t = _t(params)
    b = CircuitBuilder()
    data = b.noop(b.input("data"), t)
    pos = b.noop(b.input("overlay_pos"), _INT)
    null_value = b.noop(b.input("null_value"), t)
    fill = b.replicate(t, null_value, b.length(pos, _INT))
    b.result("col", b.scatter(t, data, pos, fill))
    return b.build()


def _nullable_patched_verify(params, cols):
    if len(cols["null_value"]) != 1:
        return False
    pos = cols["overlay_pos"].values
    return _is_distinct(pos) and all(p < len(cols["data"]) for p in pos)


def _nullable_patched_encode(params, family):
    col = family["col"]
    null_value = params["null_value"]
    idx = [i for i, v in enumerate(col.values) if v == null_value]
    return {
        "data": col,
        "overlay_pos": Column(INT, idx),
        "null_value": scalar_column(col.element_type, null_value),
    }


register_codec(
    SimpleCodec(
        "nullable.patched",
        form_spec=lambda p: {"data": _et(p), "overlay_pos": INT, "null_value": _et(p)},
        decoded_labels=lambda p: ["col"],
        build_decoder=_nullable_patched_decoder,
        encode=_nullable_patched_encode,
        host_verify=_nullable_patched_verify,
    )
)


def nullable_build(strategy: str, base: Column, null_positions, null_value) -> SchemeInstance:
    """Build a nullable instance from a column and its null index set."""
    n = len(base)
    nulls = sorted(set(null_positions))
    if any(p >= n for p in nulls):
        raise OperatorError("out-of-range", "null position beyond column length")
    t = base.element_type
    params = {"type": str(t), "null_value": null_value}
    if strategy == "complementing":
        keep = [i for i in range(n) if i not in set(nulls)]
        cols = {
            "pos": Column(INT, keep),
            "data": Column(t, [base[i] for i in keep]),
            "length": scalar_column(INT, n),
            "null_value": scalar_column(t, null_value),
        }
        return SchemeInstance("nullable.complementing", params, cols)
    if strategy == "patched":
        cols = {
            "data": base,
            "overlay_pos": Column(INT, nulls),
            "null_value": scalar_column(t, null_value),
        }
        return SchemeInstance("nullable.patched", params, cols)
    raise OperatorError("bad-params", f"unknown nullable strategy {strategy!r}")


# -- host-level decode fronts (the spec's operation surface) ---------------------------------


def indexed_decode(pos: Column, data: Column) -> Column:
    inst = SchemeInstance("indexed", {"type": str(data.element_type)}, {"pos": pos, "data": data})
    return decode(inst)["col"]


def complementing_subcolumns_decode(pos: Column, data1: Column, data2: Column) -> Column:
    inst = SchemeInstance(
        "column.complementing",
        {"type": str(data1.element_type)},
        {"pos": pos, "data_1": data1, "data_2": data2},
    )
    return decode(inst)["col"]


def overlaid_column_decode(data: Column, overlay_pos: Column, overlay_data: Column) -> Column:
    inst = SchemeInstance(
        "column.overlaid",
        {"type": str(data.element_type)},
        {"data": data, "overlay_pos": overlay_pos, "overlay_data": overlay_data},
    )
    return decode(inst)["col"]


def segmented_subcolumn_decode(segment_length: int, segment_pos: Column, data: Column) -> SubcolumnStd:
    inst = SchemeInstance(
        "subcolumn.segmented",
        {"type": str(data.element_type), "segment_length": segment_length},
        {
            "segment_length": scalar_column(INT, segment_length),
            "segment_pos": segment_pos,
            "data": data,
        },
    )
    out = decode(inst)
    return SubcolumnStd(out["pos"], out["data"]).canonical()


def index_set_decode(variant: str, columns: dict) -> tuple:
    scheme = {"sparse": "indexset.sparse", "dense": "indexset.dense", "contiguous": "indexset.contiguous"}[
        variant
    ]
    out = decode(SchemeInstance(scheme, {}, columns))
    return out["full_length"].scalar(), sorted(out["elements"].values)
