"""Physical designs: fragments covering the E/R graph, their validation and generation."""

from .check import ValidityReport, Violation, check_cover
from .design import Container, Design, design_of
from .generate import (
    Options,
    build_mapping,
    enumerate_mappings,
    generate_factorized,
    generate_hierarchy_variant,
    generate_nested,
    generate_normalized,
    hierarchy_roots,
    multivalued_attributes,
    option_lattice,
)
from .model import Fragment, Mapping, deserialize_mapping, serialize_mapping

__all__ = [
    "Container",
    "Design",
    "Fragment",
    "Mapping",
    "Options",
    "ValidityReport",
    "Violation",
    "build_mapping",
    "check_cover",
    "design_of",
    "deserialize_mapping",
    "enumerate_mappings",
    "generate_factorized",
    "generate_hierarchy_variant",
    "generate_nested",
    "generate_normalized",
    "hierarchy_roots",
    "multivalued_attributes",
    "option_lattice",
    "serialize_mapping",
]
