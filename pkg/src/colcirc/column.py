"""Immutable columns, column statistics, segmented views, and `.col` files.

A column is an evaluated function ``0..n-1 -> domain(element_type)``; it is
the only kind of value carried on circuit wires.  Length-1 columns double as
scalars throughout the package.
"""

from __future__ import annotations

import struct
from collections import Counter
from dataclasses import dataclass

from .errors import ColcircError, OperatorError
from .types import ElementType, Kind


class Column:
    """An immutable, fixed-element-type sequence of values.

    Columns compare equal iff they have the same element type, length and
    pointwise values.
    """

    __slots__ = ("element_type", "values", "_hash")

    def __init__(self, element_type: ElementType, values):
        vals = tuple(values)
        for i, v in enumerate(vals):
            element_type.check_value(v, index=i)
        if element_type.kind is Kind.BIT:
            vals = tuple(int(v) for v in vals)  # normalize bools
        object.__setattr__(self, "element_type", element_type)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("columns are immutable")

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def __iter__(self):
        return iter(self.values)

    def __eq__(self, other):
        if not isinstance(other, Column):
            return NotImplemented
        return (
            self.element_type == other.element_type
            and self.values == other.values
        )

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash((self.element_type, self.values))
            object.__setattr__(self, "_hash", h)
        return h

    def __repr__(self):
        shown = ", ".join(repr(v) for v in self.values[:8])
        if len(self.values) > 8:
            shown += ", ..."
        return f"Column({self.element_type}, [{shown}])"

    @property
    def is_scalar(self) -> bool:
        return len(self.values) == 1

    def scalar(self):
        """The single value of a length-1 column."""
        if len(self.values) != 1:
            raise OperatorError("non-scalar", f"expected a scalar, got length {len(self.values)}")
        return self.values[0]

    def size_bytes(self) -> int:
        """Byte-aligned storage footprint (bit columns are packed)."""
        if self.element_type.kind is Kind.BIT:
            return (len(self.values) + 7) // 8
        return self.element_type.byte_width * len(self.values)

    def size_bits(self) -> int:
        return self.element_type.width_bits * len(self.values)


def make_column(element_type: ElementType, values) -> Column:
    return Column(element_type, values)


def scalar_column(element_type: ElementType, value) -> Column:
    return Column(element_type, (value,))


@dataclass(frozen=True)
class FrequencyTable:
    """Occurrence counts of the values appearing in a column."""

    entries: dict
    total: int

    @property
    def support(self):
        return set(self.entries)

    def top(self, k: int):
        """The ``k`` most frequent (value, count) pairs, count-descending."""
        return sorted(self.entries.items(), key=lambda kv: (-kv[1], repr(kv[0])))[:k]


def frequency_distribution(col: Column) -> FrequencyTable:
    return FrequencyTable(dict(Counter(col.values)), len(col))


@dataclass(frozen=True)
class SegmentedViewSpec:
    """Interpretation of a length-n column as ceil(n/l) consecutive segments."""

    segment_length: int
    column_length: int

    def __post_init__(self):
        if self.segment_length <= 0:
            raise ValueError("segment length must be positive")
        if self.column_length < 0:
            raise ValueError("column length must be non-negative")

    @property
    def segment_count(self) -> int:
        return -(-self.column_length // self.segment_length)

    @property
    def has_slack(self) -> bool:
        return self.column_length % self.segment_length != 0


def segmented_get(col: Column, spec: SegmentedViewSpec, i: int, j: int):
    """Element ``i`` of segment ``j``, i.e. ``col[j*l + i]``."""
    ell = spec.segment_length
    if not 0 <= i < ell or j < 0:
        raise OperatorError("out-of-range", f"segment coordinates ({i}, {j}) invalid for l={ell}")
    flat = j * ell + i
    if flat >= len(col):
        raise OperatorError("out-of-range", f"index {flat} beyond column length {len(col)}")
    return col[flat]


def representation_size_bytes(cols) -> int:
    """Total byte footprint of a labeled column family (dict or iterable)."""
    if isinstance(cols, dict):
        cols = cols.values()
    return sum(c.size_bytes() for c in cols)


def representation_size_bits(cols) -> int:
    if isinstance(cols, dict):
        cols = cols.values()
    return sum(c.size_bits() for c in cols)


# -- binary .col files -------------------------------------------------------

_MAGIC = b"CCOL1"
_KIND_TAGS = {
    Kind.UNSIGNED: 0,
    Kind.SIGNED: 1,
    Kind.FLOAT: 2,
    Kind.BIT: 3,
    Kind.UNIT: 4,
    Kind.BOTTOM: 5,
}
_TAG_KINDS = {v: k for k, v in _KIND_TAGS.items()}


def _pack_values(col: Column) -> bytes:
    et = col.element_type
    k = et.kind
    if k is Kind.BIT:
        out = bytearray((len(col) + 7) // 8)
        for i, v in enumerate(col.values):
            if v:
                out[i >> 3] |= 1 << (i & 7)  # LSB-first within each byte
        return bytes(out)
    if k is Kind.UNIT:
        return b""
    if k is Kind.FLOAT:
        fmt = "<f" if et.width_bits == 32 else "<d"
        return b"".join(struct.pack(fmt, v) for v in col.values)
    width = et.byte_width
    if k is Kind.SIGNED:
        return b"".join(v.to_bytes(width, "little", signed=True) for v in col.values)
    return b"".join(v.to_bytes(width, "little") for v in col.values)


def write_col_bytes(col: Column) -> bytes:
    et = col.element_type
    if et.kind is Kind.PRODUCT:
        raise ColcircError("product-typed columns are not file-serializable")
    header = _MAGIC + bytes([_KIND_TAGS[et.kind], et.width_bits]) + len(col).to_bytes(8, "little")
    return header + _pack_values(col)


def read_col_bytes(data: bytes) -> Column:
    if data[:5] != _MAGIC:
        raise ColcircError("not a .col file (bad magic)")
    kind = _TAG_KINDS.get(data[5])
    if kind is None:
        raise ColcircError(f"unknown element-type tag {data[5]}")
    width = data[6]
    et = ElementType(kind, width)
    n = int.from_bytes(data[7:15], "little")
    payload = data[15:]
    if kind is Kind.BIT:
        need = (n + 7) // 8
        if len(payload) != need:
            raise ColcircError(f"bit payload of {len(payload)} bytes, expected {need}")
        vals = [(payload[i >> 3] >> (i & 7)) & 1 for i in range(n)]
        return Column(et, vals)
    if kind is Kind.UNIT:
        if payload:
            raise ColcircError("unit column carries no payload")
        return Column(et, [()] * n)
    if kind is Kind.BOTTOM:
        if n or payload:
            raise ColcircError("bottom columns are empty")
        return Column(et, [])
    if kind is Kind.FLOAT:
        fmt = "<f" if width == 32 else "<d"
        step = width // 8
        if len(payload) != step * n:
            raise ColcircError("float payload length mismatch")
        vals = [struct.unpack(fmt, payload[i * step : (i + 1) * step])[0] for i in range(n)]
        return Column(et, vals)
    step = et.byte_width
    if len(payload) != step * n:
        raise ColcircError("integer payload length mismatch")
    signed = kind is Kind.SIGNED
    vals = [int.from_bytes(payload[i * step : (i + 1) * step], "little", signed=signed) for i in range(n)]
    return Column(et, vals)


def write_col_file(path, col: Column) -> None:
    with open(path, "wb") as f:
        f.write(write_col_bytes(col))


def read_col_file(path) -> Column:
    with open(path, "rb") as f:
        return read_col_bytes(f.read())
