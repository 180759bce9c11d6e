"""Fixed-width element types carried on circuit wires.

A type has a domain, a width in bits, and a deterministic byte-level
representation used by the ``.col`` file format.  Product types exist only
as outputs of tuple-constructing operators and as variable-width building
blocks; they are capped at 512 bits and are not file-serializable.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import Enum

from .errors import TypeDomainError


class Kind(Enum):
    UNSIGNED = "unsigned"
    SIGNED = "signed"
    FLOAT = "float"
    BIT = "bit"
    UNIT = "unit"
    BOTTOM = "bottom"
    PRODUCT = "product"


_MAX_PRODUCT_BITS = 512


@dataclass(frozen=True)
class ElementType:
    kind: Kind
    width_bits: int
    components: tuple["ElementType", ...] = field(default=())

    def __post_init__(self):
        k, w = self.kind, self.width_bits
        if k in (Kind.UNSIGNED, Kind.SIGNED):
            if not 1 <= w <= 64:
                raise ValueError(f"integer width must be in 1..64, got {w}")
        elif k is Kind.FLOAT:
            if w not in (32, 64):
                raise ValueError(f"float width must be 32 or 64, got {w}")
        elif k is Kind.BIT:
            if w != 1:
                raise ValueError("bit type has width 1")
        elif k in (Kind.UNIT, Kind.BOTTOM):
            if w != 0:
                raise ValueError(f"{k.value} type has width 0")
        elif k is Kind.PRODUCT:
            if not self.components:
                raise ValueError("product type needs at least one component")
            if w != sum(c.width_bits for c in self.components):
                raise ValueError("product width must equal the sum of component widths")
            if w > _MAX_PRODUCT_BITS:
                raise ValueError(f"product width {w} exceeds the {_MAX_PRODUCT_BITS}-bit cap")
        if k is not Kind.PRODUCT and self.components:
            raise ValueError("only product types have components")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def unsigned(width: int) -> "ElementType":
        return ElementType(Kind.UNSIGNED, width)

    @staticmethod
    def signed(width: int) -> "ElementType":
        return ElementType(Kind.SIGNED, width)

    @staticmethod
    def float_(width: int) -> "ElementType":
        return ElementType(Kind.FLOAT, width)

    @staticmethod
    def product(*components: "ElementType") -> "ElementType":
        return ElementType(Kind.PRODUCT, sum(c.width_bits for c in components), tuple(components))

    # -- domain ------------------------------------------------------------

    @property
    def is_integer(self) -> bool:
        return self.kind in (Kind.UNSIGNED, Kind.SIGNED, Kind.BIT)

    @property
    def is_numeric(self) -> bool:
        return self.is_integer or self.kind is Kind.FLOAT

    def bounds(self) -> tuple[int, int]:
        """Inclusive integer bounds; only meaningful for integer kinds."""
        if self.kind is Kind.UNSIGNED:
            return 0, (1 << self.width_bits) - 1
        if self.kind is Kind.SIGNED:
            half = 1 << (self.width_bits - 1)
            return -half, half - 1
        if self.kind is Kind.BIT:
            return 0, 1
        raise TypeError(f"{self} has no integer bounds")

    def contains(self, value) -> bool:
        k = self.kind
        if k in (Kind.UNSIGNED, Kind.SIGNED, Kind.BIT):
            if isinstance(value, bool) or not isinstance(value, int):
                return k is Kind.BIT and isinstance(value, bool)
            lo, hi = self.bounds()
            return lo <= value <= hi
        if k is Kind.FLOAT:
            if not isinstance(value, float):
                return False
            if self.width_bits == 64:
                return True
            # f32 domain: values that survive a round-trip through 4 bytes
            packed = struct.pack("<f", value)
            return struct.unpack("<f", packed)[0] == value or value != value
        if k is Kind.UNIT:
            return value == ()
        if k is Kind.BOTTOM:
            return False
        if k is Kind.PRODUCT:
            return (
                isinstance(value, tuple)
                and len(value) == len(self.components)
                and all(c.contains(v) for c, v in zip(self.components, value))
            )
        raise AssertionError(k)

    def check_value(self, value, index=None):
        if not self.contains(value):
            raise TypeDomainError(
                f"value {value!r} not in domain of {self}"
                + (f" (at index {index})" if index is not None else ""),
                index=index,
                value=value,
            )

    def zero(self):
        """A canonical filler value (used for scatter bases and padding)."""
        k = self.kind
        if k in (Kind.UNSIGNED, Kind.BIT):
            return 0
        if k is Kind.SIGNED:
            return 0
        if k is Kind.FLOAT:
            return 0.0
        if k is Kind.UNIT:
            return ()
        if k is Kind.PRODUCT:
            return tuple(c.zero() for c in self.components)
        raise TypeError(f"{self} has no values")

    # -- sizes and names -----------------------------------------------------

    @property
    def byte_width(self) -> int:
        """Bytes one element occupies in byte-aligned storage; 0 for bit/unit."""
        if self.kind is Kind.BIT:
            return 0
        return (self.width_bits + 7) // 8

    def __str__(self) -> str:
        k = self.kind
        if k is Kind.UNSIGNED:
            return f"u{self.width_bits}"
        if k is Kind.SIGNED:
            return f"i{self.width_bits}"
        if k is Kind.FLOAT:
            return f"f{self.width_bits}"
        if k is Kind.PRODUCT:
            return "prod(" + ",".join(str(c) for c in self.components) + ")"
        return k.value


def parse_type(name: str) -> ElementType:
    """Parse the textual type names used in circuit/bundle JSON files."""
    name = name.strip()
    if name == "bit":
        return BIT
    if name == "unit":
        return UNIT
    if name == "bottom":
        return BOTTOM
    if name.startswith("prod(") and name.endswith(")"):
        inner = name[5:-1]
        parts, depth, cur = [], 0, []
        for ch in inner:
            if ch == "," and depth == 0:
                parts.append("".join(cur))
                cur = []
                continue
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            cur.append(ch)
        if cur:
            parts.append("".join(cur))
        return ElementType.product(*(parse_type(p) for p in parts))
    prefix, rest = name[0], name[1:]
    if prefix in ("u", "i", "f") and rest.isdigit():
        width = int(rest)
        if prefix == "u":
            return ElementType.unsigned(width)
        if prefix == "i":
            return ElementType.signed(width)
        return ElementType.float_(width)
    raise ValueError(f"unknown element type name {name!r}")


BIT = ElementType(Kind.BIT, 1)
UNIT = ElementType(Kind.UNIT, 0)
BOTTOM = ElementType(Kind.BOTTOM, 0)
U8 = ElementType.unsigned(8)
U16 = ElementType.unsigned(16)
U32 = ElementType.unsigned(32)
U64 = ElementType.unsigned(64)
I8 = ElementType.signed(8)
I16 = ElementType.signed(16)
I32 = ElementType.signed(32)
I64 = ElementType.signed(64)
F32 = ElementType.float_(32)
F64 = ElementType.float_(64)

# The index type: wide enough for any column handled by this implementation.
INT = U64
