"""Columnar circuits: port digraphs with operator vertices, and their evaluation.

A circuit's layout graph connects vertex out-ports to vertex in-ports, is
acyclic, feeds every in-port at most once, and only joins ports with the
same element type.  Interface input labels biject onto the disengaged
in-ports; output labels point at out-ports.  Evaluation cascades input
columns through the vertices and is deterministic regardless of execution
order.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor, wait
from dataclasses import dataclass

from .column import Column
from .errors import (
    ColcircError,
    EvaluationError,
    InvalidCircuitError,
    MissingInputError,
    OperatorError,
)
from .ops import Signature, instantiate
from .types import parse_type

RESERVED_LABEL_PREFIX = "cut:"

IN = "in"
OUT = "out"


@dataclass(frozen=True)
class PortRef:
    vertex_id: str
    port_label: str
    direction: str  # IN or OUT

    def __str__(self):
        return f"{self.vertex_id}.{self.port_label}"


def in_port(vertex_id, label) -> PortRef:
    return PortRef(vertex_id, label, IN)


def out_port(vertex_id, label) -> PortRef:
    return PortRef(vertex_id, label, OUT)


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str

    def describe(self):
        return f"{self.kind}: {self.detail}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple

    @property
    def ok(self):
        return not self.violations


@dataclass(frozen=True)
class ColumnarCircuit:
    vertices: dict  # vertex_id -> OperatorInstance
    edges: frozenset  # of (PortRef out, PortRef in)
    interface: dict  # circuit label -> PortRef
    signature: Signature

    def __post_init__(self):
        object.__setattr__(self, "edges", frozenset(self.edges))

    # -- structural helpers -------------------------------------------------

    def port_type(self, port: PortRef):
        op = self.vertices.get(port.vertex_id)
        if op is None:
            return None
        side = op.signature.inputs if port.direction == IN else op.signature.outputs
        return side.get(port.port_label)

    def in_ports(self):
        for vid, op in self.vertices.items():
            for label in op.signature.inputs:
                yield PortRef(vid, label, IN)

    def out_ports(self):
        for vid, op in self.vertices.items():
            for label in op.signature.outputs:
                yield PortRef(vid, label, OUT)

    def engaged_in_ports(self):
        return {dst for _, dst in self.edges}

    def disengaged_in_ports(self):
        return set(self.in_ports()) - self.engaged_in_ports()

    def input_labels(self):
        return list(self.signature.inputs)

    def output_labels(self):
        return list(self.signature.outputs)


def circuit(vertices, edges, interface) -> ColumnarCircuit:
    """Build a circuit, deriving its signature from the interface mapping."""
    vertices = dict(vertices)
    edges = frozenset(edges)
    interface = dict(interface)
    ins, outs = {}, {}
    for label, port in interface.items():
        op = vertices.get(port.vertex_id)
        if op is None:
            raise ColcircError(f"interface label {label!r} points at unknown vertex {port.vertex_id!r}")
        if port.direction == IN:
            t = op.signature.inputs.get(port.port_label)
            if t is None:
                raise ColcircError(f"interface label {label!r} points at unknown in-port {port}")
            ins[label] = t
        else:
            t = op.signature.outputs.get(port.port_label)
            if t is None:
                raise ColcircError(f"interface label {label!r} points at unknown out-port {port}")
            outs[label] = t
    return ColumnarCircuit(vertices, edges, interface, Signature(ins, outs))


def validate_circuit(c: ColumnarCircuit) -> ValidationReport:
    """Full structural check; violations are data, not failures."""
    violations = []

    known_in = set(c.in_ports())
    known_out = set(c.out_ports())

    # ports named by edges must exist and obey the in/out orientation
    fed = {}
    for src, dst in c.edges:
        if src.direction != OUT or src not in known_out:
            violations.append(Violation("bad-edge-source", f"{src} is not a vertex out-port"))
            continue
        if dst.direction != IN or dst not in known_in:
            violations.append(Violation("bad-edge-target", f"{dst} is not a vertex in-port"))
            continue
        fed.setdefault(dst, []).append(src)
        t_src, t_dst = c.port_type(src), c.port_type(dst)
        if t_src != t_dst:
            violations.append(
                Violation("type-mismatch", f"edge {src} ({t_src}) -> {dst} ({t_dst})")
            )
    for dst, srcs in fed.items():
        if len(srcs) > 1:
            violations.append(Violation("multi-fed-port", f"{dst} is the target of {len(srcs)} edges"))

    # acyclicity of the vertex-level dependency graph
    deps = {vid: set() for vid in c.vertices}
    for src, dst in c.edges:
        if src.vertex_id in deps and dst.vertex_id in deps:
            deps[dst.vertex_id].add(src.vertex_id)
    state = {}

    def has_cycle(v):
        state[v] = 1
        for u in deps[v]:
            s = state.get(u)
            if s == 1 or (s is None and has_cycle(u)):
                return True
        state[v] = 2
        return False

    if any(state.get(v) is None and has_cycle(v) for v in deps):
        violations.append(Violation("cycle", "layout graph contains a directed cycle"))

    # interface: inputs biject onto disengaged in-ports, outputs hit out-ports
    disengaged = known_in - set(fed)
    seen_ports = {}
    for label in c.signature.inputs:
        port = c.interface.get(label)
        if port is None:
            violations.append(Violation("dangling-interface", f"input label {label!r} is unmapped"))
            continue
        if port not in known_in:
            violations.append(Violation("dangling-interface", f"input label {label!r} -> missing port {port}"))
            continue
        if port not in disengaged:
            violations.append(Violation("engaged-input", f"input label {label!r} -> engaged port {port}"))
        if port in seen_ports:
            violations.append(
                Violation("input-not-injective", f"labels {seen_ports[port]!r} and {label!r} share {port}")
            )
        seen_ports[port] = label
        if c.port_type(port) != c.signature.inputs[label]:
            violations.append(Violation("type-mismatch", f"input label {label!r} type differs from {port}"))
    unmapped = disengaged - set(seen_ports)
    for port in sorted(unmapped, key=str):
        violations.append(Violation("unmapped-disengaged-input", f"{port} has no circuit input label"))
    for label in c.signature.outputs:
        port = c.interface.get(label)
        if port is None or port not in known_out:
            violations.append(Violation("dangling-interface", f"output label {label!r} -> {port}"))
        elif c.port_type(port) != c.signature.outputs[label]:
            violations.append(Violation("type-mismatch", f"output label {label!r} type differs from {port}"))

    return ValidationReport(tuple(violations))


def check_valid(c: ColumnarCircuit) -> ColumnarCircuit:
    report = validate_circuit(c)
    if not report.ok:
        raise InvalidCircuitError(report)
    return c


# -- evaluation ----------------------------------------------------------------


def _toposort(c: ColumnarCircuit):
    deps = {vid: set() for vid in c.vertices}
    consumers = {vid: set() for vid in c.vertices}
    for src, dst in c.edges:
        deps[dst.vertex_id].add(src.vertex_id)
        consumers[src.vertex_id].add(dst.vertex_id)
    order = []
    ready = sorted(v for v, d in deps.items() if not d)
    pending = {v: len(d) for v, d in deps.items()}
    while ready:
        v = ready.pop()
        order.append(v)
        for u in sorted(consumers[v]):
            pending[u] -= 1
            if pending[u] == 0:
                ready.append(u)
    if len(order) != len(c.vertices):
        raise InvalidCircuitError(ValidationReport((Violation("cycle", "cannot order vertices"),)))
    return order, deps, consumers


def _gather_vertex_inputs(c, vid, port_values, input_columns):
    op = c.vertices[vid]
    args = {}
    for label in op.signature.inputs:
        port = PortRef(vid, label, IN)
        if port in port_values:
            args[label] = port_values[port]
        else:
            args[label] = input_columns[port]
    return args


def _bind_inputs(c: ColumnarCircuit, inputs: dict) -> dict:
    bound = {}
    for label, t in c.signature.inputs.items():
        if label not in inputs:
            raise MissingInputError(f"no column supplied for input {label!r}")
        col = inputs[label]
        if col.element_type != t:
            raise MissingInputError(
                f"input {label!r} expects element type {t}, got {col.element_type}"
            )
        bound[c.interface[label]] = col
    return bound


def _run_vertex(c, vid, args):
    try:
        return c.vertices[vid].apply(args)
    except OperatorError as exc:
        raise EvaluationError(vid, exc) from exc


def max_threads() -> int:
    env = os.environ.get("COLCIRC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return min(8, os.cpu_count() or 1)


_POOL = None


def _pool():
    global _POOL
    if _POOL is None:
        _POOL = ThreadPoolExecutor(max_workers=max_threads())
    return _POOL


def evaluate_ports(c: ColumnarCircuit, inputs: dict, parallel: bool = False) -> dict:
    """Evaluate the circuit and return the column observed at every port.

    Each out-port is computed exactly once per run; fan-out shares the same
    immutable column.  With ``parallel=True`` ready vertices run on a thread
    pool; the result is identical to the single-threaded reference.
    """
    input_columns = _bind_inputs(c, inputs)
    order, deps, consumers = _toposort(c)
    edge_by_target = {dst: src for src, dst in c.edges}
    port_values = {}

    def record_outputs(vid, outs):
        op = c.vertices[vid]
        for label, col in outs.items():
            if not isinstance(col, Column):
                raise EvaluationError(vid, OperatorError("bad-output", f"{label} is not a column"))
            port_values[PortRef(vid, label, OUT)] = col
        for label in op.signature.outputs:
            if label not in outs:
                raise EvaluationError(vid, OperatorError("bad-output", f"missing output {label}"))

    def propagate(vid):
        for label in c.vertices[vid].signature.inputs:
            tgt = PortRef(vid, label, IN)
            src = edge_by_target.get(tgt)
            if src is not None:
                port_values[tgt] = port_values[src]

    if not parallel:
        for vid in order:
            propagate(vid)
            args = _gather_vertex_inputs(c, vid, port_values, input_columns)
            record_outputs(vid, _run_vertex(c, vid, args))
    else:
        pool = _pool()
        pending = {v: len(d) for v, d in deps.items()}
        futures = {}

        def submit(vid):
            propagate(vid)
            args = _gather_vertex_inputs(c, vid, port_values, input_columns)
            futures[pool.submit(_run_vertex, c, vid, args)] = vid

        for vid in order:
            if pending[vid] == 0:
                submit(vid)
        remaining = len(order)
        while remaining:
            done, _ = wait(list(futures), return_when="FIRST_COMPLETED")
            for fut in done:
                vid = futures.pop(fut)
                record_outputs(vid, fut.result())
                remaining -= 1
                for u in sorted(consumers[vid]):
                    pending[u] -= 1
                    if pending[u] == 0:
                        submit(u)

    for port, col in input_columns.items():
        port_values.setdefault(port, col)
    return port_values


def evaluate_circuit(c: ColumnarCircuit, inputs: dict, parallel: bool = False) -> dict:
    """The circuit-computed function: labeled inputs to labeled outputs."""
    port_values = evaluate_ports(c, inputs, parallel=parallel)
    return {label: port_values[c.interface[label]] for label in c.signature.outputs}


def evaluate_decision_circuit(c: ColumnarCircuit, inputs: dict, parallel: bool = False) -> bool:
    """Run a verifier-style circuit: single boolean output of length 1."""
    from .types import BIT

    outs = [t for t in c.signature.outputs.values()]
    if len(outs) != 1 or outs[0] != BIT:
        raise OperatorError("non-scalar-output", "decision circuits have a single bit output")
    (value,) = evaluate_circuit(c, inputs, parallel=parallel).values()
    if len(value) != 1:
        raise OperatorError("non-scalar-output", f"decision output has length {len(value)}")
    return bool(value[0])


# -- JSON serialization ----------------------------------------------------------


def _port_to_str(port: PortRef) -> str:
    return f"{port.vertex_id}.{port.port_label}"


def _port_from_str(s: str, c_vertices, direction_hint=None):
    vid, sep, label = s.rpartition(".")
    if not sep:
        raise ColcircError(f"bad port reference {s!r}")
    op = c_vertices.get(vid)
    if op is None:
        raise ColcircError(f"port reference {s!r} names unknown vertex {vid!r}")
    if label in op.signature.inputs and (direction_hint in (None, IN)):
        return PortRef(vid, label, IN)
    if label in op.signature.outputs and (direction_hint in (None, OUT)):
        return PortRef(vid, label, OUT)
    raise ColcircError(f"vertex {vid!r} has no {direction_hint or 'any'}-port {label!r}")


def circuit_to_json(c: ColumnarCircuit) -> dict:
    return {
        "signature": {
            "inputs": {k: str(t) for k, t in c.signature.inputs.items()},
            "outputs": {k: str(t) for k, t in c.signature.outputs.items()},
        },
        "vertices": [
            {"id": vid, "op": op.op_name, "params": op.params}
            for vid, op in sorted(c.vertices.items())
        ],
        "edges": [
            {"from": f, "to": t}
            for f, t in sorted((_port_to_str(src), _port_to_str(dst)) for src, dst in c.edges)
        ],
        "interface": {label: _port_to_str(p) for label, p in sorted(c.interface.items())},
    }


def circuit_from_json(doc: dict) -> ColumnarCircuit:
    vertices = {}
    for v in doc["vertices"]:
        vid = v["id"]
        if "." in vid:
            raise ColcircError(f"vertex id {vid!r} may not contain '.'")
        if vid in vertices:
            raise ColcircError(f"duplicate vertex id {vid!r}")
        vertices[vid] = instantiate(v["op"], v.get("params", {}))
    edges = set()
    for e in doc.get("edges", []):
        src = _port_from_str(e["from"], vertices, OUT)
        dst = _port_from_str(e["to"], vertices, IN)
        edges.add((src, dst))
    interface = {}
    sig_ins = doc.get("signature", {}).get("inputs", {})
    for label, pstr in doc.get("interface", {}).items():
        hint = IN if label in sig_ins else None
        interface[label] = _port_from_str(pstr, vertices, hint)
    c = circuit(vertices, edges, interface)
    for label, tname in sig_ins.items():
        declared = parse_type(tname)
        actual = c.signature.inputs.get(label)
        if actual != declared:
            raise ColcircError(f"declared input {label!r}: {tname} but ports imply {actual}")
    for label, tname in doc.get("signature", {}).get("outputs", {}).items():
        declared = parse_type(tname)
        actual = c.signature.outputs.get(label)
        if actual != declared:
            raise ColcircError(f"declared output {label!r}: {tname} but ports imply {actual}")
    return c


def dump_circuit(c: ColumnarCircuit) -> str:
    return json.dumps(circuit_to_json(c), indent=2, sort_keys=True)


def load_circuit(text: str) -> ColumnarCircuit:
    return circuit_from_json(json.loads(text))
