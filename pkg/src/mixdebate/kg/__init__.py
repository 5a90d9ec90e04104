from .store import (
    INVERSE_PREFIX,
    KnowledgeGraph,
    RelationNeighborhood,
    Triple,
    is_literal,
    load_kg,
    mark_inverse,
    one_hop_relations,
    read_names,
    read_triples,
    remove_crucial_triples,
    removal_count,
    split_marked,
    triples_for,
    write_triples,
)
from .sparql import SparqlBackend

__all__ = [
    "INVERSE_PREFIX",
    "KnowledgeGraph",
    "RelationNeighborhood",
    "SparqlBackend",
    "Triple",
    "is_literal",
    "load_kg",
    "mark_inverse",
    "one_hop_relations",
    "read_names",
    "read_triples",
    "remove_crucial_triples",
    "removal_count",
    "split_marked",
    "triples_for",
    "write_triples",
]
