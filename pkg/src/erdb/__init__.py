"""Entity-relationship database layer: schema, query dialect, mappings, compiler, engine."""

__version__ = "0.1.0"
