"""Structural algebra over circuits.

Union, input assignment, induced subcircuits, subcircuit replacement,
operator lifting, fusion into composite operators, and duplicate-vertex
elimination.  All transformations are pure: the input circuit is never
modified and a new circuit is returned.
"""

from __future__ import annotations

import itertools
import json

from .circuit import (
    IN,
    OUT,
    RESERVED_LABEL_PREFIX,
    ColumnarCircuit,
    PortRef,
    check_valid,
    circuit,
    validate_circuit,
)
from .errors import ColcircError, InvalidCircuitError, OperatorError, RegistryError
from .ops import OperatorInstance, instantiate, is_registered, register_fused


def _retag(c: ColumnarCircuit, tag: str, relabel: bool) -> ColumnarCircuit:
    vmap = {vid: f"{tag}{vid}" for vid in c.vertices}
    vertices = {vmap[vid]: op for vid, op in c.vertices.items()}
    edges = {
        (PortRef(vmap[s.vertex_id], s.port_label, OUT), PortRef(vmap[t.vertex_id], t.port_label, IN))
        for s, t in c.edges
    }
    interface = {
        (f"{tag}{label}" if relabel else label): PortRef(vmap[p.vertex_id], p.port_label, p.direction)
        for label, p in c.interface.items()
    }
    return circuit(vertices, edges, interface)


def circuit_union(c1: ColumnarCircuit, c2: ColumnarCircuit) -> ColumnarCircuit:
    """Disjoint union; colliding vertex ids or labels are tag-disambiguated."""
    vertex_clash = set(c1.vertices) & set(c2.vertices)
    label_clash = set(c1.interface) & set(c2.interface)
    if vertex_clash or label_clash:
        c1 = _retag(c1, "1:", relabel=bool(label_clash))
        c2 = _retag(c2, "2:", relabel=bool(label_clash))
    vertices = {**c1.vertices, **c2.vertices}
    edges = set(c1.edges) | set(c2.edges)
    interface = {**c1.interface, **c2.interface}
    return circuit(vertices, edges, interface)


def _reaches(c: ColumnarCircuit, start_vertex: str, goal_vertex: str) -> bool:
    consumers = {}
    for s, t in c.edges:
        consumers.setdefault(s.vertex_id, set()).add(t.vertex_id)
    seen, stack = set(), [start_vertex]
    while stack:
        v = stack.pop()
        if v == goal_vertex:
            return True
        if v in seen:
            continue
        seen.add(v)
        stack.extend(consumers.get(v, ()))
    return False


def assign_input(c: ColumnarCircuit, input_label: str, source: PortRef) -> ColumnarCircuit:
    """Engage the in-port behind ``input_label`` with an existing out-port."""
    if input_label not in c.signature.inputs:
        raise ColcircError(f"{input_label!r} is not a circuit input label")
    target = c.interface[input_label]
    src_type = c.port_type(source)
    if source.direction != OUT or src_type is None:
        raise ColcircError(f"{source} is not a vertex out-port of this circuit")
    if src_type != c.signature.inputs[input_label]:
        raise OperatorError(
            "type-mismatch", f"{source} has type {src_type}, input expects {c.signature.inputs[input_label]}"
        )
    if _reaches(c, target.vertex_id, source.vertex_id):
        raise OperatorError("would-create-cycle", f"{source} depends on {target}")
    vertices = dict(c.vertices)
    edges = set(c.edges) | {(source, target)}
    interface = {k: v for k, v in c.interface.items() if k != input_label}
    return circuit(vertices, edges, interface)


def cut_label(port: PortRef) -> str:
    return f"{RESERVED_LABEL_PREFIX}{port.vertex_id}:{port.port_label}"


def induced_subcircuit(c: ColumnarCircuit, vertex_set) -> ColumnarCircuit:
    """Restrict to ``vertex_set``; severed connections become fresh labels.

    A cut port keeps its identity: the new interface label is
    ``cut:<vertex>:<port>`` for the port on the retained side.
    """
    keep = set(vertex_set)
    unknown = keep - set(c.vertices)
    if unknown:
        raise ColcircError(f"unknown vertices {sorted(unknown)}")
    vertices = {vid: op for vid, op in c.vertices.items() if vid in keep}
    edges = {
        (s, t) for s, t in c.edges if s.vertex_id in keep and t.vertex_id in keep
    }
    interface = {}
    for label, port in c.interface.items():
        if port.vertex_id in keep:
            interface[label] = port
    # ports severed by the restriction
    for s, t in c.edges:
        if t.vertex_id in keep and s.vertex_id not in keep:
            interface[cut_label(t)] = t
        if s.vertex_id in keep and t.vertex_id not in keep:
            interface.setdefault(cut_label(s), s)
    return circuit(vertices, edges, interface)


def lift_operator(op: OperatorInstance, vertex_id: str = "v") -> ColumnarCircuit:
    """The one-vertex circuit whose interface is the operator's signature."""
    interface = {}
    for label in op.signature.inputs:
        interface[label] = PortRef(vertex_id, label, IN)
    for label in op.signature.outputs:
        interface[label] = PortRef(vertex_id, label, OUT)
    return circuit({vertex_id: op}, set(), interface)


def replace_subcircuit(
    c: ColumnarCircuit,
    vertex_set,
    replacement: ColumnarCircuit,
    rho: dict,
) -> ColumnarCircuit:
    """Swap the subcircuit induced by ``vertex_set`` for ``replacement``.

    ``rho`` maps each replacement interface port onto the original cut port
    it stands in for (a bijection, type-compatible port for port).  Interface
    labels of the original circuit that pointed into the replaced region are
    re-routed through the inverse of ``rho``.
    """
    keep = set(vertex_set)
    removed = induced_subcircuit(c, keep)
    survivors = {vid: op for vid, op in c.vertices.items() if vid not in keep}

    clash = set(survivors) & set(replacement.vertices)
    if clash:
        replacement = _retag(replacement, "r:", relabel=False)
        rho = {
            PortRef(f"r:{p.vertex_id}", p.port_label, p.direction): q for p, q in rho.items()
        }

    # the cut ports of the removed region, and ports the outer circuit expects
    cut_ports = {port for label, port in removed.interface.items() if label.startswith(RESERVED_LABEL_PREFIX)}
    outer_ports = {
        port
        for label, port in c.interface.items()
        if port.vertex_id in keep
    }
    needed = cut_ports | outer_ports

    inv = {}
    for rport, oport in rho.items():
        if oport in inv.values():
            raise OperatorError("bijection-incomplete", f"two replacement ports map onto {oport}")
        if oport not in needed:
            raise OperatorError("bijection-incomplete", f"{oport} is not a cut or interface port of the region")
        r_type = replacement.port_type(rport)
        o_type = removed.port_type(oport) or c.port_type(oport)
        if r_type is None:
            raise OperatorError("bijection-incomplete", f"{rport} is not a port of the replacement")
        if r_type != o_type:
            raise OperatorError("type-mismatch", f"{rport} ({r_type}) cannot stand in for {oport} ({o_type})")
        if rport.direction != oport.direction:
            raise OperatorError("type-mismatch", f"{rport} and {oport} differ in direction")
        inv[oport] = rport
    missing = needed - set(inv)
    if missing:
        raise OperatorError("bijection-incomplete", f"no replacement port for {sorted(map(str, missing))}")

    vertices = {**survivors, **replacement.vertices}
    edges = set()
    for s, t in c.edges:
        s_in = s.vertex_id in keep
        t_in = t.vertex_id in keep
        if not s_in and not t_in:
            edges.add((s, t))
        elif s_in and not t_in:
            edges.add((inv[s], t))
        elif not s_in and t_in:
            edges.add((s, inv[t]))
        # edges interior to the region vanish with it
    edges |= set(replacement.edges)

    interface = {}
    for label, port in c.interface.items():
        interface[label] = inv[port] if port.vertex_id in keep else port
    result = circuit(vertices, edges, interface)
    return check_valid(result)


_fused_counter = itertools.count(1)


def fuse_subcircuit(c: ColumnarCircuit, vertex_set, fused_name: str | None = None) -> ColumnarCircuit:
    """Replace ``vertex_set`` by one vertex running the captured subcircuit.

    The synthesized operator is registered in the catalog under
    ``fused_name`` and interiors are evaluated without exposing their edges.
    """
    keep = set(vertex_set)
    if not keep:
        raise ColcircError("cannot fuse an empty vertex set")
    if fused_name is None:
        fused_name = f"fused:{next(_fused_counter)}"
    if is_registered(fused_name):
        raise RegistryError(f"operator {fused_name!r} already registered")
    inner = induced_subcircuit(c, keep)
    register_fused(fused_name, inner)
    op = instantiate(fused_name)
    vid = fused_name.replace(".", "_")
    lifted = lift_operator(op, vertex_id=vid)
    rho = {}
    for label, port in inner.interface.items():
        rho[PortRef(vid, label, port.direction)] = port
    return replace_subcircuit(c, keep, lifted, rho)


def rename_label(c: ColumnarCircuit, old: str, new: str) -> ColumnarCircuit:
    """Rename one interface label; the port mapping is unchanged."""
    if old not in c.interface:
        raise ColcircError(f"no interface label {old!r}")
    if new in c.interface:
        raise ColcircError(f"label {new!r} already in use")
    interface = {(new if label == old else label): port for label, port in c.interface.items()}
    return circuit(dict(c.vertices), set(c.edges), interface)


def rename_labels(c: ColumnarCircuit, mapping: dict) -> ColumnarCircuit:
    out = c
    for old, new in mapping.items():
        out = rename_label(out, old, new)
    return out


def drop_output(c: ColumnarCircuit, label: str) -> ColumnarCircuit:
    """Remove an output label from the interface (the vertex stays)."""
    if label not in c.signature.outputs:
        raise ColcircError(f"{label!r} is not an output label")
    interface = {k: v for k, v in c.interface.items() if k != label}
    return circuit(dict(c.vertices), set(c.edges), interface)


def _params_key(params: dict) -> str:
    try:
        return json.dumps(params, sort_keys=True)
    except TypeError:
        return repr(id(params))  # unserializable params never compare equal


def eliminate_duplicate_vertices(c: ColumnarCircuit) -> ColumnarCircuit:
    """Merge vertices with identical operator, params, and input sources.

    Runs to a fixpoint; the evaluated function is unchanged.  Fused
    operators only merge when they are the same registered operator.
    """
    current = c
    while True:
        feeders = {}
        input_of = {port: label for label, port in current.interface.items() if port.direction == IN}
        for s, t in current.edges:
            feeders[t] = ("edge", s.vertex_id, s.port_label)
        keys = {}
        for vid, op in sorted(current.vertices.items()):
            sources = []
            for label in op.signature.inputs:
                port = PortRef(vid, label, IN)
                if port in feeders:
                    sources.append((label,) + feeders[port])
                else:
                    sources.append((label, "input", input_of.get(port)))
            key = (op.op_name, _params_key(op.params), tuple(sources))
            keys.setdefault(key, []).append(vid)

        merge = {}
        for key, vids in keys.items():
            if len(vids) > 1 and key[2] and all(src[1] == "edge" for src in key[2]):
                rep = vids[0]
                for dup in vids[1:]:
                    merge[dup] = rep
            elif len(vids) > 1 and not key[2]:
                # zero-input vertices (scalars, fused sources) always merge
                rep = vids[0]
                for dup in vids[1:]:
                    merge[dup] = rep
        if not merge:
            return current

        def moved(port: PortRef) -> PortRef:
            new_vid = merge.get(port.vertex_id)
            return PortRef(new_vid, port.port_label, port.direction) if new_vid else port

        vertices = {vid: op for vid, op in current.vertices.items() if vid not in merge}
        edges = set()
        for s, t in current.edges:
            if t.vertex_id in merge:
                continue  # the duplicate's inputs disappear with it
            edges.add((moved(s), t))
        interface = {label: moved(port) for label, port in current.interface.items()}
        current = circuit(vertices, edges, interface)


__all__ = [
    "circuit_union",
    "assign_input",
    "induced_subcircuit",
    "replace_subcircuit",
    "lift_operator",
    "fuse_subcircuit",
    "eliminate_duplicate_vertices",
    "cut_label",
    "validate_circuit",
    "InvalidCircuitError",
]
