"""In-memory triple store and the crucial-triple removal transform."""
from __future__ import annotations

import hashlib
import random
from collections import defaultdict
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from os import PathLike
from typing import Iterable, Mapping, NamedTuple

from ..errors import EntityNotFound, IntegrityError, KgParseError

INVERSE_PREFIX = "~"


class Triple(NamedTuple):
    head: str
    relation: str
    tail: str


def is_literal(node: str) -> bool:
    """Literal tails are written in double quotes, e.g. ``"2010-10-01"``."""
    return node.startswith('"')


def literal_value(node: str) -> str:
    return node[1:-1] if is_literal(node) and node.endswith('"') and len(node) >= 2 else node


def mark_inverse(relation: str) -> str:
    return INVERSE_PREFIX + relation


def split_marked(relation: str) -> tuple[str, bool]:
    """Return (bare relation, is_inverse)."""
    if relation.startswith(INVERSE_PREFIX):
        return relation[len(INVERSE_PREFIX):], True
    return relation, False


@dataclass(frozen=True)
class RelationNeighborhood:
    outbound: list[str] = field(default_factory=list)
    inbound: list[str] = field(default_factory=list)

    def marked(self) -> list[str]:
        """Outbound names followed by inbound names carrying the inverse marker."""
        return list(self.outbound) + [mark_inverse(r) for r in self.inbound]

    def __len__(self) -> int:
        return len(self.outbound) + len(self.inbound)


def _order_key(t: Triple, inverse: bool) -> tuple[str, str]:
    return (mark_inverse(t.relation) if inverse else t.relation, t.head if inverse else t.tail)


def select_incident(
    outbound: Mapping[str, Iterable[Triple]],
    inbound: Mapping[str, Iterable[Triple]],
    relations: Iterable[str],
) -> list[Triple]:
    """Shared ordering for ``triples_for`` across backends."""
    keyed = []
    for rel in dict.fromkeys(relations):
        bare, inverse = split_marked(rel)
        source = inbound if inverse else outbound
        for t in source.get(bare, ()):
            keyed.append((_order_key(t, inverse), t))
    keyed.sort()
    # a self-loop is reachable through both r and ~r; report it once
    return list(dict.fromkeys(t for _, t in keyed))


class KnowledgeGraph:
    """Immutable graph ``G = (E, R, T)`` with head/tail adjacency indexes.

    Entities are every triple head, every non-literal tail, and every id in
    the names registry. Literal tails are terminal and not entities.
    """

    def __init__(self, triples: Iterable[Triple] = (), names: Mapping[str, str] | None = None):
        uniq: dict[Triple, None] = {}
        for t in triples:
            t = Triple(*t)
            if not t.head or not t.relation:
                raise ValueError(f"triple needs a non-empty head and relation: {t!r}")
            uniq[t] = None
        self._triples = frozenset(uniq)
        self._names = dict(names or {})
        self._by_head, self._by_tail = self.build_indexes(self._triples)
        entities = set(self._names)
        relations = set()
        for t in self._triples:
            entities.add(t.head)
            relations.add(t.relation)
            if not is_literal(t.tail):
                entities.add(t.tail)
        self._entities = frozenset(entities)
        self._relations = frozenset(relations)

    @staticmethod
    def build_indexes(triples: Iterable[Triple]):
        by_head: dict[str, dict[str, list[Triple]]] = defaultdict(lambda: defaultdict(list))
        by_tail: dict[str, dict[str, list[Triple]]] = defaultdict(lambda: defaultdict(list))
        for t in triples:
            by_head[t.head][t.relation].append(t)
            by_tail[t.tail][t.relation].append(t)
        freeze = lambda idx: {e: {r: tuple(sorted(ts)) for r, ts in rels.items()} for e, rels in idx.items()}
        return freeze(by_head), freeze(by_tail)

    # -- container protocol -------------------------------------------------
    @property
    def triples(self) -> frozenset[Triple]:
        return self._triples

    @property
    def entities(self) -> frozenset[str]:
        return self._entities

    @property
    def relations(self) -> frozenset[str]:
        return self._relations

    @property
    def names(self) -> Mapping[str, str]:
        return dict(self._names)

    @property
    def by_head(self):
        return self._by_head

    @property
    def by_tail(self):
        return self._by_tail

    def __len__(self) -> int:
        return len(self._triples)

    def __contains__(self, triple) -> bool:
        return Triple(*triple) in self._triples

    def has_entity(self, entity: str) -> bool:
        return entity in self._entities

    def name_of(self, node: str) -> str:
        if is_literal(node):
            return literal_value(node)
        return self._names.get(node, node)

    def entity_names(self) -> list[tuple[str, str]]:
        """(id, display name) for every entity, sorted by id."""
        return [(e, self.name_of(e)) for e in sorted(self._entities)]

    def sorted_triples(self) -> list[Triple]:
        return sorted(self._triples)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for t in self.sorted_triples():
            h.update("\t".join(t).encode("utf-8") + b"\n")
        return h.hexdigest()

    # -- queries ----------------------------------------------------------------
    def _require(self, entity: str) -> None:
        if entity not in self._entities:
            raise EntityNotFound(entity)

    def one_hop_relations(self, entity: str) -> RelationNeighborhood:
        self._require(entity)
        return RelationNeighborhood(
            outbound=sorted(self._by_head.get(entity, {})),
            inbound=sorted(self._by_tail.get(entity, {})),
        )

    def triples_for(self, entity: str, relations: Iterable[str]) -> list[Triple]:
        self._require(entity)
        return select_incident(self._by_head.get(entity, {}), self._by_tail.get(entity, {}), relations)

    def incident(self, entity: str) -> list[Triple]:
        return self.triples_for(entity, self.one_hop_relations(entity).marked())

    def without(self, removed: Iterable[Triple]) -> "KnowledgeGraph":
        drop = set(removed)
        return KnowledgeGraph((t for t in self._triples if t not in drop), self._names)


def one_hop_relations(g: KnowledgeGraph, entity: str) -> RelationNeighborhood:
    return g.one_hop_relations(entity)


def triples_for(g: KnowledgeGraph, entity: str, relations: Iterable[str]) -> list[Triple]:
    return g.triples_for(entity, relations)


# -- files ---------------------------------------------------------------------

def _data_lines(path):
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield line_no, line


def read_triples(path: str | PathLike) -> list[Triple]:
    triples = []
    for line_no, line in _data_lines(path):
        parts = line.split("\t")
        if len(parts) != 3 or not all(p.strip() for p in parts[:2]) or not parts[2].strip():
            raise KgParseError(path, line_no, f"expected head<TAB>relation<TAB>tail, got {line!r}")
        triples.append(Triple(*(p.strip() for p in parts)))
    return triples


def read_names(path: str | PathLike) -> dict[str, str]:
    names = {}
    for line_no, line in _data_lines(path):
        parts = line.split("\t", 1)
        if len(parts) != 2 or not parts[0].strip():
            raise KgParseError(path, line_no, f"expected entity_id<TAB>name, got {line!r}")
        names[parts[0].strip()] = parts[1].strip()
    return names


def load_kg(path: str | PathLike, names_path: str | PathLike | None = None) -> KnowledgeGraph:
    """Load a TSV triples file (and optional names file); duplicates are dropped."""
    names = read_names(names_path) if names_path else {}
    return KnowledgeGraph(read_triples(path), names)


def write_triples(triples: Iterable[Triple], path: str | PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in sorted(triples):
            fh.write("\t".join(t) + "\n")


# -- incompleteness ---------------------------------------------------------------

def removal_count(ratio: float, n: int) -> int:
    """round(ratio * n), halves rounded up."""
    if not 0 <= ratio <= 1:
        raise ValueError(f"ratio must lie in [0, 1], got {ratio}")
    return int((Decimal(str(ratio)) * n).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def remove_crucial_triples(
    g: KnowledgeGraph, gold_paths: Iterable[Triple], ratio: float, seed: int
) -> tuple[KnowledgeGraph, list[Triple]]:
    """Drop a seeded random ``ratio`` share of the distinct gold-path triples.

    The candidates are shuffled once per seed and a prefix is removed, so for
    a fixed seed the removal sets of increasing ratios are nested.
    """
    gold = sorted({Triple(*t) for t in gold_paths})
    for t in gold:
        if t not in g:
            raise IntegrityError(f"gold-path triple not in graph: {tuple(t)}")
    n_remove = removal_count(ratio, len(gold))
    if n_remove == 0:
        return g, []
    random.Random(seed).shuffle(gold)
    removed = gold[:n_remove]
    return g.without(removed), removed
