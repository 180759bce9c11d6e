"""colcirc: a columnar-circuit execution engine and codec toolkit.

Columns are immutable evaluated functions carried on circuit wires;
operators are named partial functions over columns; circuits are port
digraphs evaluated deterministically.  Representation and compression
schemes are codecs whose decoders are circuits, and circuits themselves
support a structural algebra (union, replacement, fusion, deduplication).
"""

from .column import (
    Column,
    FrequencyTable,
    SegmentedViewSpec,
    frequency_distribution,
    make_column,
    read_col_bytes,
    read_col_file,
    representation_size_bits,
    representation_size_bytes,
    scalar_column,
    segmented_get,
    write_col_bytes,
    write_col_file,
)
from .types import ElementType, Kind, parse_type
from .ops import OperatorInstance, Signature, catalog_names, instantiate
from .circuit import (
    ColumnarCircuit,
    PortRef,
    circuit,
    circuit_from_json,
    circuit_to_json,
    evaluate_circuit,
    evaluate_decision_circuit,
    evaluate_ports,
    in_port,
    out_port,
    validate_circuit,
)
from .transform import (
    assign_input,
    circuit_union,
    eliminate_duplicate_vertices,
    fuse_subcircuit,
    induced_subcircuit,
    lift_operator,
    replace_subcircuit,
)
from .codec import (
    CodecEntry,
    SchemeInstance,
    codec,
    compression_ratio,
    decode,
    encode,
    equivalent,
    register_codec,
    registered_schemes,
    verify,
)
from .compose import CompositionRecipe, compose
from .bundle import read_bundle, write_bundle
from .errors import (
    ColcircError,
    EvaluationError,
    InvalidCircuitError,
    NotEncodable,
    OperatorError,
    TypeDomainError,
    VerificationFailed,
)

__version__ = "0.1.0"
