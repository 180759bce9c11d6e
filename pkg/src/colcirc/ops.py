"""The operator catalog: named, parameterized computational nodes.

Every operator is a pure partial function from labeled input columns to
labeled output columns.  Violated length or domain contracts raise
:class:`OperatorError`; arithmetic is checked, never wrapping.

Catalog entries resolve ``(op_name, params)`` to a concrete
:class:`OperatorInstance` whose signature uses the element types named in
the params, so circuits can be type-checked structurally.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .column import Column, scalar_column
from .errors import OperatorError, RegistryError
from .types import BIT, INT, ElementType, Kind, parse_type


@dataclass(frozen=True)
class Signature:
    """Labeled input and output element types of an operator or circuit."""

    inputs: dict
    outputs: dict

    def __post_init__(self):
        overlap = set(self.inputs) & set(self.outputs)
        if overlap:
            raise ValueError(f"input and output labels must be disjoint, both have {overlap}")


@dataclass(frozen=True)
class OperatorInstance:
    """A catalog operator bound to concrete params and element types."""

    op_name: str
    params: dict
    signature: Signature
    # fused operators capture an inner circuit; everything else leaves this None
    inner: object = field(default=None, compare=False)

    def apply(self, inputs: dict) -> dict:
        return _CATALOG[self.op_name].apply(self, inputs)


class _OpDef:
    def __init__(self, name, instantiate, apply):
        self.name = name
        self.instantiate = instantiate  # params -> OperatorInstance
        self.apply = apply  # (inst, {label: Column}) -> {label: Column}


_CATALOG: dict[str, _OpDef] = {}


def register_operator(name, instantiate, apply, replace=False):
    if name in _CATALOG and not replace:
        raise RegistryError(f"operator {name!r} already registered")
    _CATALOG[name] = _OpDef(name, instantiate, apply)


def catalog_names():
    return sorted(_CATALOG)


def instantiate(op_name: str, params: dict | None = None) -> OperatorInstance:
    if op_name not in _CATALOG:
        raise RegistryError(f"unknown operator {op_name!r}")
    return _CATALOG[op_name].instantiate(params or {})


def _typ(params, key="type", default=None):
    t = params.get(key, default)
    if t is None:
        raise OperatorError("bad-params", f"missing {key!r} parameter")
    return parse_type(t) if isinstance(t, str) else t


def _require_equal_lengths(cols, labels):
    lengths = {label: len(cols[label]) for label in labels}
    if len(set(lengths.values())) > 1:
        raise OperatorError("length-mismatch", f"unequal input lengths {lengths}")


def _check_int(et: ElementType, value, what="result"):
    lo, hi = et.bounds()
    if not lo <= value <= hi:
        raise OperatorError("overflow", f"{what} {value} outside {et} range [{lo}, {hi}]")
    return value


# -- elementwise functions ---------------------------------------------------
#
# Each builtin is described by (derive_signature, vectorized apply).  The
# signature derivation receives the params dict and returns (inputs, outputs)
# as ordered label->type dicts.


def _binary_arith(fn_name, pyop):
    def sig(params):
        t = _typ(params)
        return {"lhs": t, "rhs": t}, {"result": t}

    def run(inst, cols):
        t = inst.signature.outputs["result"]
        lhs, rhs = cols["lhs"].values, cols["rhs"].values
        if t.kind is Kind.FLOAT:
            vals = [pyop(a, b) for a, b in zip(lhs, rhs)]
        else:
            vals = [_check_int(t, pyop(a, b)) for a, b in zip(lhs, rhs)]
        return {"result": Column(t, vals)}

    return sig, run


def _binary_bool(pyop):
    def sig(params):
        return {"lhs": BIT, "rhs": BIT}, {"result": BIT}

    def run(inst, cols):
        vals = [pyop(a, b) for a, b in zip(cols["lhs"].values, cols["rhs"].values)]
        return {"result": Column(BIT, vals)}

    return sig, run


def _comparison(pyop):
    def sig(params):
        t = _typ(params)
        return {"lhs": t, "rhs": t}, {"result": BIT}

    def run(inst, cols):
        vals = [1 if pyop(a, b) else 0 for a, b in zip(cols["lhs"].values, cols["rhs"].values)]
        return {"result": Column(BIT, vals)}

    return sig, run


def _fn_not():
    def sig(params):
        return {"arguments": BIT}, {"result": BIT}

    def run(inst, cols):
        return {"result": Column(BIT, [1 - v for v in cols["arguments"].values])}

    return sig, run


def _fn_identity():
    def sig(params):
        t = _typ(params)
        return {"arguments": t}, {"result": t}

    def run(inst, cols):
        return {"result": cols["arguments"]}

    return sig, run


def _fn_in_range():
    def sig(params):
        t = _typ(params)
        return {"arguments": t}, {"result": BIT}

    def run(inst, cols):
        lo, hi = inst.params["lo"], inst.params["hi"]
        vals = [1 if lo <= v <= hi else 0 for v in cols["arguments"].values]
        return {"result": Column(BIT, vals)}

    return sig, run


_CMPS = {
    "eq": lambda a, b: a == b,
    "ne": lambda a, b: a != b,
    "lt": lambda a, b: a < b,
    "le": lambda a, b: a <= b,
    "gt": lambda a, b: a > b,
    "ge": lambda a, b: a >= b,
}


def _fn_const_compare():
    def sig(params):
        t = _typ(params)
        return {"arguments": t}, {"result": BIT}

    def run(inst, cols):
        cmp = _CMPS[inst.params.get("cmp", "eq")]
        ref = inst.params["value"]
        vals = [1 if cmp(v, ref) else 0 for v in cols["arguments"].values]
        return {"result": Column(BIT, vals)}

    return sig, run


def _cast_value(v, src: ElementType, dst: ElementType):
    if dst.kind is Kind.FLOAT:
        f = float(v)
        if src.is_integer and abs(v) > (1 << 53):
            raise OperatorError("overflow", f"{v} not exactly representable as a float")
        if dst.width_bits == 32:
            import struct as _s

            f32 = _s.unpack("<f", _s.pack("<f", f))[0]
            if src.kind is Kind.FLOAT and src.width_bits == 64 and f32 != f and f == f:
                raise OperatorError("overflow", f"{v} not exactly representable as f32")
            f = f32
        return f
    if dst.is_integer:
        if src.kind is Kind.FLOAT:
            iv = int(v)  # truncation toward zero
        else:
            iv = v
        return _check_int(dst, iv, what=f"cast of {v}")
    raise OperatorError("bad-params", f"cannot cast to {dst}")


def _fn_cast():
    def sig(params):
        src = _typ(params, "from")
        dst = _typ(params, "to")
        return {"arguments": src}, {"result": dst}

    def run(inst, cols):
        src = inst.signature.inputs["arguments"]
        dst = inst.signature.outputs["result"]
        vals = [_cast_value(v, src, dst) for v in cols["arguments"].values]
        return {"result": Column(dst, vals)}

    return sig, run


def _fn_clip_by():
    def sig(params):
        t = _typ(params)
        return {"arguments": t}, {"result": t}

    def run(inst, cols):
        k = inst.params["k"]
        if k <= 0:
            raise OperatorError("bad-params", "clip_by needs a positive k")
        t = inst.signature.outputs["result"]
        return {"result": Column(t, [v // k for v in cols["arguments"].values])}

    return sig, run


def _fn_scale():
    def sig(params):
        t = _typ(params)
        return {"arguments": t}, {"result": t}

    def run(inst, cols):
        k = inst.params["k"]
        t = inst.signature.outputs["result"]
        return {"result": Column(t, [_check_int(t, v * k) for v in cols["arguments"].values])}

    return sig, run


def _fn_tuple_make():
    def sig(params):
        comps = [parse_type(t) if isinstance(t, str) else t for t in params["types"]]
        ins = {f"component_{i + 1}": t for i, t in enumerate(comps)}
        return ins, {"result": ElementType.product(*comps)}

    def run(inst, cols):
        labels = list(inst.signature.inputs)
        t = inst.signature.outputs["result"]
        vals = list(zip(*(cols[lb].values for lb in labels))) if labels else []
        return {"result": Column(t, vals)}

    return sig, run


def _fn_carve():
    def sig(params):
        w, p = params["w"], params["p"]
        if not 0 < p < w <= 64:
            raise OperatorError("bad-params", f"carve needs 0 < p < w <= 64, got w={w} p={p}")
        return (
            {"arguments": ElementType.unsigned(w)},
            {"prefixes": ElementType.unsigned(p), "suffixes": ElementType.unsigned(w - p)},
        )

    def run(inst, cols):
        w, p = inst.params["w"], inst.params["p"]
        shift = w - p
        mask = (1 << shift) - 1
        pre, suf = [], []
        for v in cols["arguments"].values:
            if v >> w:
                raise OperatorError("out-of-range", f"value {v} exceeds {w} bits")
            pre.append(v >> shift)
            suf.append(v & mask)
        return {
            "prefixes": Column(inst.signature.outputs["prefixes"], pre),
            "suffixes": Column(inst.signature.outputs["suffixes"], suf),
        }

    return sig, run


_ELEMENTWISE_FNS = {
    "add": _binary_arith("add", lambda a, b: a + b),
    "sub": _binary_arith("sub", lambda a, b: a - b),
    "mul": _binary_arith("mul", lambda a, b: a * b),
    "and": _binary_bool(lambda a, b: a & b),
    "or": _binary_bool(lambda a, b: a | b),
    "not": _fn_not(),
    "eq": _comparison(lambda a, b: a == b),
    "lt": _comparison(lambda a, b: a < b),
    "le": _comparison(lambda a, b: a <= b),
    "in_range": _fn_in_range(),
    "const_compare": _fn_const_compare(),
    "identity": _fn_identity(),
    "cast": _fn_cast(),
    "clip_by": _fn_clip_by(),
    "scale": _fn_scale(),
    "tuple_make": _fn_tuple_make(),
    "carve": _fn_carve(),
}


def _ew_instantiate(params):
    fn = params.get("fn")
    if fn not in _ELEMENTWISE_FNS:
        raise OperatorError("bad-params", f"unknown elementwise fn {fn!r}")
    ins, outs = _ELEMENTWISE_FNS[fn][0](params)
    return OperatorInstance("elementwise", dict(params), Signature(ins, outs))


def _ew_apply(inst, cols):
    _require_equal_lengths(cols, list(inst.signature.inputs))
    return _ELEMENTWISE_FNS[inst.params["fn"]][1](inst, cols)


register_operator("elementwise", _ew_instantiate, _ew_apply)


def elementwise(fn: str, args, **params) -> list[Column]:
    """Direct invocation helper; returns the output columns in label order."""
    params = dict(params, fn=fn)
    if "type" not in params and args and fn not in ("tuple_make",):
        params.setdefault("type", str(args[0].element_type))
    inst = instantiate("elementwise", params)
    labels = list(inst.signature.inputs)
    if len(labels) != len(args):
        raise OperatorError("length-mismatch", f"{fn} takes {len(labels)} columns, got {len(args)}")
    out = inst.apply(dict(zip(labels, args)))
    return [out[lb] for lb in inst.signature.outputs]


# -- simple generators and structural operators -------------------------------


def _simple(name, sig_fn, run_fn):
    def inst_fn(params):
        ins, outs = sig_fn(params)
        return OperatorInstance(name, dict(params), Signature(ins, outs))

    register_operator(name, inst_fn, run_fn)


def _scalar_sig(params):
    t = _typ(params)
    return {}, {"value": t}


def _scalar_run(inst, cols):
    t = inst.signature.outputs["value"]
    return {"value": scalar_column(t, inst.params["value"])}


_simple("scalar", _scalar_sig, _scalar_run)


def _noop_sig(params):
    t = _typ(params)
    return {"arguments": t}, {"result": t}


def _noop_run(inst, cols):
    return {"result": cols["arguments"]}


_simple("no_op", _noop_sig, _noop_run)


def _replicate_sig(params):
    t = _typ(params)
    return {"value": t, "factor": INT}, {"replicated": t}


def _replicate_run(inst, cols):
    value = cols["value"].scalar()
    factor = cols["factor"].scalar()
    if factor < 0:
        raise OperatorError("negative-factor", f"cannot replicate {factor} times")
    t = inst.signature.outputs["replicated"]
    return {"replicated": Column(t, [value] * factor)}


_simple("replicate", _replicate_sig, _replicate_run)


def _select_sig(params):
    t = _typ(params)
    return {"data": t, "selection": BIT}, {"selected": t}


def _select_run(inst, cols):
    _require_equal_lengths(cols, ["data", "selection"])
    # The relaxed variant (ordered=False) is allowed to emit any permutation
    # of the selected elements; this implementation keeps the original order
    # in both modes, which satisfies the weaker contract.
    t = inst.signature.outputs["selected"]
    vals = [d for d, s in zip(cols["data"].values, cols["selection"].values) if s]
    return {"selected": Column(t, vals)}


_simple("select", _select_sig, _select_run)


def _iota_sig(params):
    t = _typ(params, default=str(INT))
    if not t.is_integer:
        raise OperatorError("bad-params", "iota output type must be an integer type")
    return {"n": INT}, {"result": t}


def _iota_run(inst, cols):
    n = cols["n"].scalar()
    if n < 0:
        raise OperatorError("negative-length", f"iota of negative length {n}")
    t = inst.signature.outputs["result"]
    if n:
        _check_int(t, n - 1, what="iota maximum")
    return {"result": Column(t, range(n))}


_simple("iota", _iota_sig, _iota_run)


def _permute_sig(params):
    t = _typ(params)
    return {"permutation": INT, "data": t}, {"permuted": t}


def _permute_run(inst, cols):
    _require_equal_lengths(cols, ["permutation", "data"])
    perm = cols["permutation"].values
    data = cols["data"].values
    n = len(perm)
    out = [None] * n
    seen = [False] * n
    for i, p in enumerate(perm):
        if not 0 <= p < n or seen[p]:
            raise OperatorError("not-a-permutation", f"position {p} at index {i} is invalid or repeated")
        seen[p] = True
        out[p] = data[i]
    return {"permuted": Column(inst.signature.outputs["permuted"], out)}


_simple("permute", _permute_sig, _permute_run)


def _length_sig(params):
    t = _typ(params)
    return {"col": t}, {"result": INT}


def _length_run(inst, cols):
    return {"result": scalar_column(INT, len(cols["col"]))}


_simple("length", _length_sig, _length_run)


def _concat_sig(params):
    t = _typ(params)
    k = params.get("k", 2)
    if k < 1:
        raise OperatorError("bad-params", "concatenate needs k >= 1")
    return {f"col_{i + 1}": t for i in range(k)}, {"result": t}


def _concat_run(inst, cols):
    t = inst.signature.outputs["result"]
    vals = []
    for label in inst.signature.inputs:
        vals.extend(cols[label].values)
    return {"result": Column(t, vals)}


_simple("concatenate", _concat_sig, _concat_run)


def _scatter_sig(params):
    t = _typ(params)
    return {"col": t, "pos": INT, "data": t}, {"result": t}


def _scatter_run(inst, cols):
    _require_equal_lengths(cols, ["pos", "data"])
    base = list(cols["col"].values)
    n = len(base)
    seen = set()
    for p, d in zip(cols["pos"].values, cols["data"].values):
        if not 0 <= p < n:
            raise OperatorError("out-of-range", f"scatter position {p} beyond length {n}")
        if p in seen:
            raise OperatorError("duplicate-position", f"scatter position {p} repeated")
        seen.add(p)
        base[p] = d
    return {"result": Column(inst.signature.outputs["result"], base)}


_simple("scatter", _scatter_sig, _scatter_run)


def _gather_sig(params):
    t = _typ(params)
    return {"pos": INT, "data": t}, {"result": t}


def _gather_run(inst, cols):
    data = cols["data"].values
    n = len(data)
    out = []
    for p in cols["pos"].values:
        if not 0 <= p < n:
            raise OperatorError("out-of-range", f"gather position {p} beyond length {n}")
        out.append(data[p])
    return {"result": Column(inst.signature.outputs["result"], out)}


_simple("gather", _gather_sig, _gather_run)


def _select_indices_sig(params):
    return {"characteristic": BIT}, {"indices": INT}


def _select_indices_run(inst, cols):
    vals = [i for i, v in enumerate(cols["characteristic"].values) if v]
    return {"indices": Column(INT, vals)}


_simple("select_indices", _select_indices_sig, _select_indices_run)


# -- segmented-view operators --------------------------------------------------


def _seg_divisible(col, ell):
    if ell <= 0:
        raise OperatorError("bad-params", f"segment length must be positive, got {ell}")
    if len(col) % ell:
        raise OperatorError(
            "slack-segment-present", f"segment length {ell} does not divide column length {len(col)}"
        )


def _transpose_sig(params):
    t = _typ(params)
    return {"segment_length": INT, "col": t}, {"transposed": t, "transposed_segment_length": INT}


def _transpose_run(inst, cols):
    ell = cols["segment_length"].scalar()
    col = cols["col"]
    _seg_divisible(col, ell)
    k = len(col) // ell
    vals = col.values
    out = [vals[j * ell + i] for i in range(ell) for j in range(k)]
    return {
        "transposed": Column(inst.signature.outputs["transposed"], out),
        "transposed_segment_length": scalar_column(INT, k),
    }


_simple("transpose", _transpose_sig, _transpose_run)


def _replicate_segments_sig(params):
    t = _typ(params)
    return (
        {"col": t, "segment_length": INT, "factor": INT},
        {"replicated": t, "out_segment_length": INT},
    )


def _replicate_segments_run(inst, cols):
    ell = cols["segment_length"].scalar()
    factor = cols["factor"].scalar()
    col = cols["col"]
    _seg_divisible(col, ell)
    if factor < 0:
        raise OperatorError("negative-factor", f"cannot replicate {factor} times")
    out = []
    for j in range(len(col) // ell):
        seg = col.values[j * ell : (j + 1) * ell]
        out.extend(seg * factor)
    return {
        "replicated": Column(inst.signature.outputs["replicated"], out),
        "out_segment_length": scalar_column(INT, ell),
    }


_simple("replicate_segments", _replicate_segments_sig, _replicate_segments_run)


def _replicate_within_sig(params):
    t = _typ(params)
    return (
        {"col": t, "segment_length": INT, "factor": INT},
        {"replicated": t, "out_segment_length": INT},
    )


def _replicate_within_run(inst, cols):
    ell = cols["segment_length"].scalar()
    factor = cols["factor"].scalar()
    col = cols["col"]
    _seg_divisible(col, ell)
    if factor < 0:
        raise OperatorError("negative-factor", f"cannot replicate {factor} times")
    out = []
    for v in col.values:
        out.extend([v] * factor)
    return {
        "replicated": Column(inst.signature.outputs["replicated"], out),
        "out_segment_length": scalar_column(INT, ell * factor),
    }


_simple("replicate_within_segments", _replicate_within_sig, _replicate_within_run)


def _zip_sig(params):
    comps = [parse_type(t) if isinstance(t, str) else t for t in params["types"]]
    if not comps:
        raise OperatorError("bad-params", "zip needs at least one component type")
    ins = {f"component_{i + 1}": t for i, t in enumerate(comps)}
    return ins, {"zipped": ElementType.product(*comps)}


def _zip_run(inst, cols):
    labels = list(inst.signature.inputs)
    _require_equal_lengths(cols, labels)
    t = inst.signature.outputs["zipped"]
    vals = list(zip(*(cols[lb].values for lb in labels)))
    return {"zipped": Column(t, vals)}


_simple("zip", _zip_sig, _zip_run)


def _compose_segments_sig(params):
    base = _typ(params)
    k = params["k"]
    if k < 1:
        raise OperatorError("bad-params", "compose_segments needs k >= 1")
    return (
        {"segment_length": INT, "components": base},
        {"composed": ElementType.product(*([base] * k))},
    )


def _compose_segments_run(inst, cols):
    k = inst.params["k"]
    ell = cols["segment_length"].scalar()
    col = cols["components"]
    if ell < 0 or len(col) != ell * k:
        raise OperatorError(
            "length-mismatch", f"expected {k} segments of length {ell}, got column length {len(col)}"
        )
    vals = col.values
    out = [tuple(vals[j * ell + i] for j in range(k)) for i in range(ell)]
    return {"composed": Column(inst.signature.outputs["composed"], out)}


_simple("compose_segments", _compose_segments_sig, _compose_segments_run)


def _assemble_sig(params):
    base = _typ(params)
    k = params["k"]
    if k < 1:
        raise OperatorError("bad-params", "assemble needs k >= 1")
    return (
        {"segment_length": INT, "components": base},
        {"composed": ElementType.product(*([base] * k))},
    )


def _assemble_run(inst, cols):
    k = inst.params["k"]
    if cols["segment_length"].scalar() != k:
        raise OperatorError("bad-params", "assemble segment_length input must equal k")
    col = cols["components"]
    _seg_divisible(col, k)
    vals = col.values
    out = [tuple(vals[i * k : (i + 1) * k]) for i in range(len(col) // k)]
    return {"composed": Column(inst.signature.outputs["composed"], out)}


_simple("assemble", _assemble_sig, _assemble_run)


# -- arithmetic over adjacency -------------------------------------------------


def widened_signed(et: ElementType) -> ElementType:
    """One widening step: a signed type able to hold any difference of values."""
    if not et.is_integer:
        raise OperatorError("bad-params", f"no widening rule for {et}")
    return ElementType.signed(min(64, et.width_bits * 2 if et.width_bits > 1 else 8))


def _derivative_sig(params):
    t = _typ(params)
    if not t.is_numeric:
        raise OperatorError("bad-params", "derivative needs a numeric column")
    if "out_type" in params:
        out = _typ(params, "out_type")
    elif t.kind is Kind.FLOAT:
        out = t
    else:
        out = widened_signed(t)
    return {"col": t}, {"differences": out}


def _derivative_run(inst, cols):
    col = cols["col"]
    if len(col) < 1:
        raise OperatorError("empty-input", "derivative needs at least one element")
    out_t = inst.signature.outputs["differences"]
    vals = col.values
    if out_t.kind is Kind.FLOAT:
        diffs = [vals[i + 1] - vals[i] for i in range(len(vals) - 1)]
    else:
        diffs = [_check_int(out_t, vals[i + 1] - vals[i]) for i in range(len(vals) - 1)]
    return {"differences": Column(out_t, diffs)}


_simple("derivative", _derivative_sig, _derivative_run)


_AGG_OPS = {
    "add": (lambda a, b: a + b, lambda t: 0 if t.is_integer else 0.0),
    "max": (lambda a, b: a if a >= b else b, lambda t: t.bounds()[0] if t.is_integer else float("-inf")),
    "min": (lambda a, b: a if a <= b else b, lambda t: t.bounds()[1] if t.is_integer else float("inf")),
    "and": (lambda a, b: a & b, lambda t: 1),
    "or": (lambda a, b: a | b, lambda t: 0),
}


def _prefix_sig(params):
    op = params.get("op", "add")
    if op not in _AGG_OPS:
        raise OperatorError("bad-params", f"unknown prefix aggregate op {op!r}")
    t = _typ(params) if op not in ("and", "or") else BIT
    return {"data": t}, {"aggregates": t}


def _prefix_run(inst, cols):
    op = inst.params.get("op", "add")
    mode = inst.params.get("mode", "inclusive")
    t = inst.signature.outputs["aggregates"]
    combine, neutral = _AGG_OPS[op]
    acc = neutral(t)
    checked = op == "add" and t.is_integer
    out = []
    for v in cols["data"].values:
        if mode == "exclusive":
            out.append(acc)
            acc = combine(acc, v)
        else:
            acc = combine(acc, v)
            out.append(acc)
        if checked:
            _check_int(t, acc, what="prefix aggregate")
    return {"aggregates": Column(t, out)}


_simple("prefix_aggregate", _prefix_sig, _prefix_run)


def _same_as_prev_sig(params):
    t = _typ(params)
    return {"col": t}, {"result": BIT}


def _same_as_prev_run(inst, cols):
    vals = cols["col"].values
    out = [0] * len(vals)
    for i in range(1, len(vals)):
        out[i] = 1 if vals[i] == vals[i - 1] else 0
    return {"result": Column(BIT, out)}


_simple("is_same_as_previous", _same_as_prev_sig, _same_as_prev_run)


def _split_first_sig(params):
    t = _typ(params)
    return {"col": t}, {"head": t, "tail": t}


def _split_first_run(inst, cols):
    col = cols["col"]
    if len(col) == 0:
        raise OperatorError("empty-input", "split_first needs a non-empty column")
    t = inst.signature.outputs["head"]
    return {"head": scalar_column(t, col[0]), "tail": Column(t, col.values[1:])}


_simple("split_first", _split_first_sig, _split_first_run)


def _carve_inst(params):
    p = dict(params, fn="carve")
    ins, outs = _ELEMENTWISE_FNS["carve"][0](p)
    return OperatorInstance("carve", p, Signature(ins, outs))


register_operator("carve", _carve_inst, _ew_apply)


# -- fused (synthesized composite) operators ----------------------------------


def register_fused(name: str, circuit) -> None:
    """Register a composite operator whose evaluation runs a captured circuit."""
    from .circuit import evaluate_circuit  # local import to avoid a cycle

    if name in _CATALOG:
        raise RegistryError(f"operator {name!r} already registered")

    def inst_fn(params):
        return OperatorInstance(name, dict(params), circuit.signature, inner=circuit)

    def run_fn(inst, cols):
        return evaluate_circuit(circuit, cols)

    register_operator(name, inst_fn, run_fn)


def is_registered(name: str) -> bool:
    return name in _CATALOG


# -- convenience wrappers (direct library calls, mirrors of the catalog) -------


def _one(inst, **cols):
    out = inst.apply(cols)
    (only,) = out.values()
    return only


def replicate(value: Column, factor: int | Column) -> Column:
    f = factor if isinstance(factor, Column) else scalar_column(INT, factor)
    inst = instantiate("replicate", {"type": str(value.element_type)})
    return _one(inst, value=value, factor=f)


def select(data: Column, selection: Column, ordered: bool = True) -> Column:
    inst = instantiate("select", {"type": str(data.element_type), "ordered": ordered})
    return _one(inst, data=data, selection=selection)


def iota(n: int | Column, type: str | ElementType = INT) -> Column:
    nc = n if isinstance(n, Column) else scalar_column(INT, n)
    return _one(instantiate("iota", {"type": str(type)}), n=nc)


def permute(permutation: Column, data: Column) -> Column:
    inst = instantiate("permute", {"type": str(data.element_type)})
    return _one(inst, permutation=permutation, data=data)


def length_of(col: Column) -> Column:
    return _one(instantiate("length", {"type": str(col.element_type)}), col=col)


def concatenate(*cols: Column) -> Column:
    if not cols:
        raise OperatorError("bad-params", "concatenate needs at least one column")
    types = {str(c.element_type) for c in cols}
    if len(types) > 1:
        raise OperatorError("type-mismatch", f"mixed element types {sorted(types)}")
    inst = instantiate("concatenate", {"type": str(cols[0].element_type), "k": len(cols)})
    return _one(inst, **{f"col_{i + 1}": c for i, c in enumerate(cols)})


def scatter(col: Column, pos: Column, data: Column) -> Column:
    inst = instantiate("scatter", {"type": str(col.element_type)})
    return _one(inst, col=col, pos=pos, data=data)


def gather(pos: Column, data: Column) -> Column:
    inst = instantiate("gather", {"type": str(data.element_type)})
    return _one(inst, pos=pos, data=data)


def select_indices(characteristic: Column) -> Column:
    return _one(instantiate("select_indices", {}), characteristic=characteristic)


def transpose(segment_length: int, col: Column) -> tuple[Column, int]:
    inst = instantiate("transpose", {"type": str(col.element_type)})
    out = inst.apply({"segment_length": scalar_column(INT, segment_length), "col": col})
    return out["transposed"], out["transposed_segment_length"].scalar()


def replicate_segments(col: Column, segment_length: int, factor: int) -> tuple[Column, int]:
    inst = instantiate("replicate_segments", {"type": str(col.element_type)})
    out = inst.apply(
        {
            "col": col,
            "segment_length": scalar_column(INT, segment_length),
            "factor": scalar_column(INT, factor),
        }
    )
    return out["replicated"], out["out_segment_length"].scalar()


def replicate_within_segments(col: Column, segment_length: int, factor: int) -> tuple[Column, int]:
    inst = instantiate("replicate_within_segments", {"type": str(col.element_type)})
    out = inst.apply(
        {
            "col": col,
            "segment_length": scalar_column(INT, segment_length),
            "factor": scalar_column(INT, factor),
        }
    )
    return out["replicated"], out["out_segment_length"].scalar()


def zip_k(*components: Column) -> Column:
    inst = instantiate("zip", {"types": [str(c.element_type) for c in components]})
    return _one(inst, **{f"component_{i + 1}": c for i, c in enumerate(components)})


def compose_segments(segment_length: int, components: Column) -> Column:
    if segment_length <= 0 or len(components) % segment_length:
        raise OperatorError(
            "slack-segment-present",
            f"segment length {segment_length} does not divide {len(components)}",
        )
    k = len(components) // segment_length
    if k == 0:
        k = 1  # l = n gives a single wrap; empty input wraps to nothing
    inst = instantiate("compose_segments", {"type": str(components.element_type), "k": k})
    return _one(inst, segment_length=scalar_column(INT, segment_length), components=components)


def assemble_k(k: int, components: Column) -> Column:
    inst = instantiate("assemble", {"type": str(components.element_type), "k": k})
    return _one(inst, segment_length=scalar_column(INT, k), components=components)


def derivative(col: Column, out_type=None) -> Column:
    params = {"type": str(col.element_type)}
    if out_type is not None:
        params["out_type"] = str(out_type)
    return _one(instantiate("derivative", params), col=col)


def prefix_aggregate(op: str, col: Column, mode: str = "inclusive") -> Column:
    inst = instantiate("prefix_aggregate", {"op": op, "mode": mode, "type": str(col.element_type)})
    return _one(inst, data=col)


def is_same_as_previous(col: Column) -> Column:
    return _one(instantiate("is_same_as_previous", {"type": str(col.element_type)}), col=col)


def split_first(col: Column) -> tuple:
    inst = instantiate("split_first", {"type": str(col.element_type)})
    out = inst.apply({"col": col})
    return out["head"].scalar(), out["tail"]


def carve(w: int, p: int, col: Column) -> tuple[Column, Column]:
    inst = instantiate("carve", {"w": w, "p": p})
    out = inst.apply({"arguments": col})
    return out["prefixes"], out["suffixes"]
