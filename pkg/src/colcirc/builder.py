"""A small fluent helper for wiring up circuits vertex by vertex.

Decoder and verifier circuits throughout the scheme modules are assembled
with this; it only produces plain :class:`ColumnarCircuit` values.
"""

from __future__ import annotations

import itertools

from .circuit import IN, OUT, ColumnarCircuit, PortRef, check_valid, circuit
from .errors import ColcircError
from .ops import instantiate
from .types import INT


class Wire:
    """Handle for a vertex out-port during construction."""

    __slots__ = ("builder", "port")

    def __init__(self, builder, port):
        self.builder = builder
        self.port = port


class Input:
    """Handle for a not-yet-connected circuit input."""

    __slots__ = ("label",)

    def __init__(self, label):
        self.label = label


class CircuitBuilder:
    def __init__(self):
        self._vertices = {}
        self._edges = set()
        self._inputs = {}  # label -> PortRef (in)
        self._outputs = {}  # label -> PortRef (out)
        self._fresh = itertools.count(1)

    def input(self, label: str) -> Input:
        return Input(label)

    def add(self, op_name: str, params: dict | None = None, _id: str | None = None, **wired):
        """Add a vertex; ``wired`` connects its in-ports to wires or inputs.

        Returns a single :class:`Wire` when the operator has one output,
        else a dict of them.
        """
        inst = instantiate(op_name, params or {})
        vid = _id or f"v{next(self._fresh)}_{op_name}"
        if vid in self._vertices:
            raise ColcircError(f"duplicate vertex id {vid!r}")
        self._vertices[vid] = inst
        for label, src in wired.items():
            if label not in inst.signature.inputs:
                raise ColcircError(f"{op_name} has no input port {label!r}")
            tgt = PortRef(vid, label, IN)
            if isinstance(src, Wire):
                self._edges.add((src.port, tgt))
            elif isinstance(src, Input):
                if src.label in self._inputs:
                    raise ColcircError(f"input {src.label!r} already feeds {self._inputs[src.label]}")
                self._inputs[src.label] = tgt
            else:
                raise ColcircError(f"cannot wire {src!r} into {tgt}")
        missing = set(inst.signature.inputs) - set(wired)
        if missing:
            raise ColcircError(f"{op_name} vertex {vid!r} left ports {sorted(missing)} unwired")
        outs = {label: Wire(self, PortRef(vid, label, OUT)) for label in inst.signature.outputs}
        if len(outs) == 1:
            return next(iter(outs.values()))
        return outs

    # convenience micro-helpers used all over the scheme decoders

    def scalar(self, type_name: str, value) -> Wire:
        return self.add("scalar", {"type": type_name, "value": value})

    def ew(self, fn: str, params: dict | None = None, **wired) -> Wire:
        return self.add("elementwise", dict(params or {}, fn=fn), **wired)

    def length(self, col: Wire | Input, type_name: str) -> Wire:
        return self.add("length", {"type": type_name}, col=col)

    def noop(self, src: Wire | Input, type_name: str) -> Wire:
        return self.add("no_op", {"type": type_name}, arguments=src)

    def sink(self, src: Wire | Input, type_name: str) -> None:
        """Relay an otherwise-unused input into a dangling NoOp."""
        self.noop(src, type_name)

    def concat(self, type_name: str, *parts) -> Wire:
        wired = {f"col_{i + 1}": p for i, p in enumerate(parts)}
        return self.add("concatenate", {"type": type_name, "k": len(parts)}, **wired)

    def replicate(self, type_name: str, value, factor) -> Wire:
        return self.add("replicate", {"type": type_name}, value=value, factor=factor)

    def iota(self, n, type_name: str = str(INT)) -> Wire:
        return self.add("iota", {"type": type_name}, n=n)

    def gather(self, type_name: str, pos, data) -> Wire:
        return self.add("gather", {"type": type_name}, pos=pos, data=data)

    def scatter(self, type_name: str, col, pos, data) -> Wire:
        return self.add("scatter", {"type": type_name}, col=col, pos=pos, data=data)

    def prefix(self, type_name: str, op: str, data, mode: str = "inclusive") -> Wire:
        return self.add("prefix_aggregate", {"type": type_name, "op": op, "mode": mode}, data=data)

    def add_cols(self, type_name: str, lhs, rhs) -> Wire:
        return self.ew("add", {"type": type_name}, lhs=lhs, rhs=rhs)

    def sub_cols(self, type_name: str, lhs, rhs) -> Wire:
        return self.ew("sub", {"type": type_name}, lhs=lhs, rhs=rhs)

    def cast(self, src: str, dst: str, arguments) -> Wire:
        if src == dst:
            return self.noop(arguments, src)
        return self.ew("cast", {"from": src, "to": dst}, arguments=arguments)

    def last_element(self, type_name: str, col: Wire, length: Wire | None = None) -> Wire:
        """Scalar holding the final element; requires a non-empty column."""
        n = length or self.length(col, type_name)
        one = self.scalar(str(INT), 1)
        idx = self.sub_cols(str(INT), n, one)
        return self.gather(type_name, idx, col)

    def total(self, type_name: str, col: Wire, via: str = "add") -> Wire:
        """Total aggregate as prefix aggregate plus last-element extraction.

        Empty inputs are handled by prepending the aggregation's neutral
        element before reducing.
        """
        from .types import parse_type

        t = parse_type(type_name)
        if via == "add":
            neutral = 0
        elif via == "max":
            neutral = t.bounds()[0] if t.is_integer else float("-inf")
        elif via == "min":
            neutral = t.bounds()[1] if t.is_integer else float("inf")
        elif via == "and":
            neutral = 1
        else:
            neutral = 0
        z = self.scalar(type_name, neutral)
        padded = self.concat(type_name, z, col)
        agg = self.prefix(type_name, via, padded)
        return self.last_element(type_name, agg)

    def output(self, label: str, wire: Wire) -> None:
        if label in self._outputs:
            raise ColcircError(f"output {label!r} already defined")
        self._outputs[label] = wire.port

    def result(self, label: str, wire: Wire) -> None:
        """Decoder-circuit output: labels are namespaced ``out:<label>`` so a
        scheme may decode to the same label names its encoded form uses."""
        self.output(f"out:{label}", wire)

    def build(self, validate: bool = True) -> ColumnarCircuit:
        interface = {}
        interface.update(self._inputs)
        for label, port in self._outputs.items():
            if label in interface:
                raise ColcircError(f"label {label!r} used for both an input and an output")
            interface[label] = port
        c = circuit(self._vertices, self._edges, interface)
        return check_valid(c) if validate else c


def run_index_wires(b: CircuitBuilder, starts: Wire, total: Wire, int_t: str = str(INT)) -> Wire:
    """Per-output-position run index for strictly increasing starts.

    Scatters a one at every run start over a zero column of length
    ``total``, takes an inclusive prefix sum, and subtracts one: the classic
    position-to-run resolution used by run-position decoders.
    """
    zeros = b.replicate(int_t, b.scalar(int_t, 0), total)
    m = b.length(starts, int_t)
    ones = b.replicate(int_t, b.scalar(int_t, 1), m)
    indicator = b.scatter(int_t, zeros, starts, ones)
    summed = b.prefix(int_t, "add", indicator)
    rep1 = b.replicate(int_t, b.scalar(int_t, 1), total)
    return b.sub_cols(int_t, summed, rep1)


def expand_ranges(
    b: CircuitBuilder,
    data_type: str,
    src_starts: Wire,
    lengths: Wire,
    data: Wire | Input,
) -> tuple[Wire, Wire]:
    """Expand per-element ``[src_start, src_start+length)`` ranges of ``data``.

    Returns ``(out_starts, out_data)``: the canonical start positions
    (prefix sums of ``lengths``) and the concatenated element data.
    Zero-length elements are legal and contribute nothing.
    """
    int_t = str(INT)
    out_starts = b.prefix(int_t, "add", lengths, mode="exclusive")
    total = b.total(int_t, lengths)
    nonzero = b.ew("const_compare", {"type": int_t, "cmp": "ne", "value": 0}, arguments=lengths)
    nz_idx = b.add("select_indices", {}, characteristic=nonzero)
    nz_out_starts = b.gather(int_t, nz_idx, out_starts)
    run_of = run_index_wires(b, nz_out_starts, total)
    elem_of = b.gather(int_t, run_of, nz_idx)
    out_pos_base = b.gather(int_t, elem_of, out_starts)
    offsets = b.sub_cols(int_t, b.iota(total), out_pos_base)
    src_base = b.gather(int_t, elem_of, src_starts)
    src = b.add_cols(int_t, src_base, offsets)
    out_data = b.gather(data_type, src, data)
    return out_starts, out_data
