"""Remote KG backend over a SPARQL 1.1 query endpoint.

Mirrors the in-memory query contract: same neighborhood shape, same triple
ordering, same inverse marker. Results are memoized per entity for the
lifetime of the backend instance.
"""
from __future__ import annotations

import logging
import threading
import time
from typing import Iterable, Mapping

import httpx

from ..errors import BackendError
from .store import RelationNeighborhood, Triple, literal_value, select_incident, split_marked, is_literal

log = logging.getLogger(__name__)

FREEBASE_PREFIX = "http://rdf.freebase.com/ns/"
RESULTS_JSON = "application/sparql-results+json"


class SparqlBackend:
    def __init__(
        self,
        endpoint: str,
        *,
        prefix: str = FREEBASE_PREFIX,
        names: Mapping[str, str] | None = None,
        timeout: float = 10.0,
        retries: int = 3,
        retry_delay: float = 0.5,
        client: httpx.Client | None = None,
    ):
        self.endpoint = endpoint
        self.prefix = prefix
        self.timeout = timeout
        self.retries = max(1, retries)
        self.retry_delay = retry_delay
        self._names = dict(names or {})
        self._client = client or httpx.Client(timeout=timeout)
        self._lock = threading.Lock()
        self._neighborhoods: dict[str, RelationNeighborhood] = {}
        self._triples: dict[tuple[str, str], tuple[Triple, ...]] = {}
        self.queries_sent = 0

    # -- IRI mapping ----------------------------------------------------------
    def iri(self, local: str) -> str:
        if any(ch in local for ch in "<>\"{}| \t\n"):
            raise ValueError(f"identifier cannot be expressed as an IRI: {local!r}")
        return f"<{self.prefix}{local}>"

    def _node(self, binding: dict) -> str:
        value = binding["value"]
        if binding.get("type") == "uri":
            return value[len(self.prefix):] if value.startswith(self.prefix) else value
        return f'"{value}"'

    # -- transport ------------------------------------------------------------
    def query(self, sparql: str) -> list[dict]:
        """Run a SELECT query and return its bindings."""
        last: Exception | None = None
        for attempt in range(1, self.retries + 1):
            try:
                self.queries_sent += 1
                resp = self._client.get(
                    self.endpoint,
                    params={"query": sparql},
                    headers={"Accept": RESULTS_JSON},
                    timeout=self.timeout,
                )
            except httpx.HTTPError as exc:
                last = BackendError(f"SPARQL request failed: {exc}")
            else:
                if resp.status_code == 200:
                    try:
                        return resp.json()["results"]["bindings"]
                    except (ValueError, KeyError, TypeError) as exc:
                        raise BackendError(f"malformed SPARQL result document: {exc}", retriable=False)
                err = BackendError(
                    f"SPARQL endpoint returned {resp.status_code}: {resp.text[:200]}",
                    status=resp.status_code,
                    retriable=resp.status_code >= 500 or resp.status_code == 429,
                )
                if not err.retriable:
                    raise err
                last = err
            log.debug("SPARQL attempt %d/%d failed: %s", attempt, self.retries, last)
            if attempt < self.retries and self.retry_delay:
                time.sleep(self.retry_delay * attempt)
        assert last is not None
        status = last.status if isinstance(last, BackendError) else None
        raise BackendError(f"{last} (after {self.retries} attempts)", status=status, retriable=False)

    # -- backend contract --------------------------------------------------------
    def one_hop_relations(self, entity: str) -> RelationNeighborhood:
        with self._lock:
            cached = self._neighborhoods.get(entity)
        if cached is not None:
            return cached
        e = self.iri(entity)
        out = self.query(f"SELECT DISTINCT ?r WHERE {{ {e} ?r ?o }}")
        inc = self.query(f"SELECT DISTINCT ?r WHERE {{ ?s ?r {e} }}")
        hood = RelationNeighborhood(
            outbound=sorted({self._node(b["r"]) for b in out}),
            inbound=sorted({self._node(b["r"]) for b in inc}),
        )
        with self._lock:
            self._neighborhoods[entity] = hood
        return hood

    def _fetch(self, entity: str, relations: list[str], inverse: bool) -> None:
        values = " ".join(self.iri(r) for r in relations)
        e = self.iri(entity)
        if inverse:
            rows = self.query(f"SELECT ?s ?r WHERE {{ ?s ?r {e} . VALUES ?r {{ {values} }} }}")
            found = [Triple(self._node(b["s"]), self._node(b["r"]), entity) for b in rows]
        else:
            rows = self.query(f"SELECT ?r ?o WHERE {{ {e} ?r ?o . VALUES ?r {{ {values} }} }}")
            found = [Triple(entity, self._node(b["r"]), self._node(b["o"])) for b in rows]
        grouped: dict[str, set[Triple]] = {r: set() for r in relations}
        for t in found:
            grouped.setdefault(t.relation, set()).add(t)
        with self._lock:
            for r in relations:
                key = ("~" + r) if inverse else r
                self._triples[(entity, key)] = tuple(sorted(grouped[r]))

    def triples_for(self, entity: str, relations: Iterable[str]) -> list[Triple]:
        relations = list(dict.fromkeys(relations))
        with self._lock:
            missing = [r for r in relations if (entity, r) not in self._triples]
        for inverse in (False, True):
            todo = [split_marked(r)[0] for r in missing if split_marked(r)[1] == inverse]
            if todo:
                self._fetch(entity, todo, inverse)
        outbound, inbound = {}, {}
        with self._lock:
            for r in relations:
                bare, inverse = split_marked(r)
                (inbound if inverse else outbound)[bare] = self._triples[(entity, r)]
        return select_incident(outbound, inbound, relations)

    def has_entity(self, entity: str) -> bool:
        if entity in self._names:
            return True
        try:
            return len(self.one_hop_relations(entity)) > 0
        except (BackendError, ValueError):
            return False

    def name_of(self, node: str) -> str:
        if is_literal(node):
            return literal_value(node)
        return self._names.get(node, node)

    def entity_names(self) -> list[tuple[str, str]]:
        return sorted(self._names.items())

    def close(self) -> None:
        self._client.close()
