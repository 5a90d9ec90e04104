"""Test doubles and independent oracles shared by the suite."""
from __future__ import annotations

import json
import math
import random
import re
import struct
import threading
from collections import Counter
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from mixdebate.kg import KnowledgeGraph, Triple
from mixdebate.llm.providers import Completion, LlmRequest

CASE_DIR = Path(__file__).resolve().parents[1] / "src" / "mixdebate" / "fixtures" / "case_study"
CASE_QUESTION = "Which film featuring Armie Hammer was selected for preservation in the National Film Registry?"


# -- oracles ---------------------------------------------------------------------

def oracle_trigram_counts(text: str, dim: int = 256) -> Counter:
    """Bucket counts built with struct/bytes rather than the kernels' arithmetic."""
    norm = " ".join(text.lower().split())
    norm = f" {norm} " if norm else ""
    out = Counter()
    for i in range(len(norm) - 2):
        data = struct.pack("<3I", *(ord(c) for c in norm[i:i + 3]))
        h = 0xCBF29CE484222325
        for byte in data:
            h = ((h ^ byte) * 0x100000001B3) % (1 << 64)
        out[h % dim] += 1
    return out


def oracle_cosine(a: Counter, b: Counter) -> float:
    dot = sum(v * b.get(k, 0) for k, v in a.items())
    aa = sum(v * v for v in a.values())
    bb = sum(v * v for v in b.values())
    return dot / math.sqrt(aa * bb) if aa and bb else 0.0


def oracle_top_k(query: str, candidates: list[str], k: int) -> list[tuple[int, float]]:
    q = oracle_trigram_counts(query)
    scored = [(i, oracle_cosine(q, oracle_trigram_counts(c))) for i, c in enumerate(candidates)]
    scored.sort(key=lambda p: (-p[1], p[0]))
    return scored[:k]


def brute_incident(g: KnowledgeGraph, e: str) -> set[Triple]:
    return {t for t in g.triples if t.head == e or t.tail == e}


# -- random data -------------------------------------------------------------------

def random_kg(rng: random.Random, n_triples: int, n_entities: int = 40, n_relations: int = 6) -> KnowledgeGraph:
    ents = [f"m.e{i}" for i in range(n_entities)]
    rels = [f"rel.r{i}" for i in range(n_relations)]
    triples = []
    for _ in range(n_triples):
        tail = rng.choice(ents) if rng.random() > 0.1 else f'"lit{rng.randrange(5)}"'
        triples.append(Triple(rng.choice(ents), rng.choice(rels), tail))
    return KnowledgeGraph(triples, {e: f"Entity {e[3:]}" for e in ents})


# -- stub servers --------------------------------------------------------------------

class _Server:
    def __init__(self, handler_cls):
        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), handler_cls)
        self.httpd.owner = self
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self.thread.start()
        self.requests: list = []

    @property
    def url(self) -> str:
        host, port = self.httpd.server_address
        return f"http://{host}:{port}"

    def close(self):
        self.httpd.shutdown()
        self.httpd.server_close()


class _Quiet(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def _send(self, status: int, body, content_type="application/json"):
        data = body if isinstance(body, bytes) else json.dumps(body).encode()
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


_IRI = r"<([^>]*)>"


class SparqlStub(_Server):
    """Answers the four SELECT shapes the remote backend issues, from a mirrored KG.

    ``fixed`` overrides every response with a canned result document;
    ``statuses`` pops an HTTP status per request before normal answering.
    """

    def __init__(self, kg: KnowledgeGraph | None = None, prefix: str = "http://rdf.freebase.com/ns/"):
        self.kg = kg or KnowledgeGraph()
        self.prefix = prefix
        self.fixed = None
        self.statuses: list[int] = []
        super().__init__(self._handler())

    def node(self, value: str) -> dict:
        if value.startswith('"'):
            return {"type": "literal", "value": value[1:-1]}
        return {"type": "uri", "value": self.prefix + value}

    def local(self, iri: str) -> str:
        return iri[len(self.prefix):]

    def answer(self, q: str) -> list[dict]:
        kg = self.kg
        m = re.fullmatch(rf"SELECT DISTINCT \?r WHERE {{ {_IRI} \?r \?o }}", q)
        if m:
            e = self.local(m.group(1))
            return [{"r": self.node(r)} for r in sorted({t.relation for t in kg.triples if t.head == e})]
        m = re.fullmatch(rf"SELECT DISTINCT \?r WHERE {{ \?s \?r {_IRI} }}", q)
        if m:
            e = self.local(m.group(1))
            return [{"r": self.node(r)} for r in sorted({t.relation for t in kg.triples if t.tail == e})]
        m = re.fullmatch(rf"SELECT \?r \?o WHERE {{ {_IRI} \?r \?o \. VALUES \?r {{ (.*) }} }}", q)
        if m:
            e = self.local(m.group(1))
            rels = {self.local(x) for x in re.findall(_IRI, m.group(2))}
            return [{"r": self.node(t.relation), "o": self.node(t.tail)}
                    for t in kg.triples if t.head == e and t.relation in rels]
        m = re.fullmatch(rf"SELECT \?s \?r WHERE {{ \?s \?r {_IRI} \. VALUES \?r {{ (.*) }} }}", q)
        if m:
            e = self.local(m.group(1))
            rels = {self.local(x) for x in re.findall(_IRI, m.group(2))}
            return [{"s": self.node(t.head), "r": self.node(t.relation)}
                    for t in kg.triples if t.tail == e and t.relation in rels]
        raise ValueError(f"unsupported query: {q}")

    def _handler(stub):
        class Handler(_Quiet):
            def do_GET(self):
                query = parse_qs(urlparse(self.path).query).get("query", [""])[0]
                stub.requests.append(query)
                if stub.statuses:
                    status = stub.statuses.pop(0)
                    if status != 200:
                        return self._send(status, b"boom", "text/plain")
                if stub.fixed is not None:
                    return self._send(200, stub.fixed)
                try:
                    bindings = stub.answer(query)
                except ValueError as exc:
                    return self._send(400, str(exc).encode(), "text/plain")
                self._send(200, {"head": {"vars": []}, "results": {"bindings": bindings}})
        return Handler


class ChatStub(_Server):
    """OpenAI-compatible chat/embeddings stub.

    ``replies`` are returned in order (the last one repeats); ``statuses`` pops
    an HTTP status per request; ``usage`` toggles the usage block.
    """

    def __init__(self, replies=("ANSWER: ok",), usage=True):
        self.replies = list(replies)
        self.statuses: list[int] = []
        self.usage = usage
        self.embed_dim = 8
        super().__init__(self._handler())

    def _handler(stub):
        class Handler(_Quiet):
            def do_POST(self):
                body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
                stub.requests.append({"path": self.path, "body": body, "auth": self.headers.get("Authorization")})
                if stub.statuses:
                    status = stub.statuses.pop(0)
                    if status != 200:
                        return self._send(status, {"error": {"message": f"status {status}"}})
                if self.path.endswith("/embeddings"):
                    data = []
                    for i, text in enumerate(body["input"]):
                        vec = [0.0] * stub.embed_dim
                        for j, ch in enumerate(text):
                            vec[(ord(ch) + j) % stub.embed_dim] += 1.0
                        data.append({"index": i, "embedding": vec})
                    return self._send(200, {"data": data})
                text = stub.replies.pop(0) if len(stub.replies) > 1 else stub.replies[0]
                out = {"choices": [{"index": 0, "message": {"role": "assistant", "content": text}}]}
                if stub.usage:
                    out["usage"] = {"prompt_tokens": 11, "completion_tokens": 7, "total_tokens": 18}
                self._send(200, out)
        return Handler


# -- rule-driven provider ---------------------------------------------------------------

class EvidenceReadingProvider:
    """Deterministic policy that answers only from what the prompt shows it.

    Synthetic examples use relation ``synthetic.answer``; a KG answer exists
    only if that triple reached the evidence, a text answer only if a passage
    says ``the answer is X.``. Everything else falls back to ``unknown``.
    """

    ANSWER_REL = "synthetic.answer"

    def __init__(self):
        self.calls = Counter()
        self._lock = threading.Lock()

    @staticmethod
    def _section(prompt: str, start: str, stop: str) -> str:
        i = prompt.find(start)
        if i < 0:
            return ""
        j = prompt.find(stop, i + len(start))
        return prompt[i + len(start): j if j >= 0 else None]

    def complete(self, request: LlmRequest, caller: str = "") -> Completion:
        role, p = request.role.value, request.rendered_prompt
        with self._lock:
            self.calls[role] += 1
        if role == "plan":
            q = p.split("Question: ", 1)[1].split("\n", 1)[0]
            text = f"SUBQUESTION: {q}"
        elif role == "entity_select":
            m = re.search(r"^- (\S+) \|", p, re.M)
            text = f"ENTITY: {m.group(1) if m else 'none'}"
        elif role == "relation_select":
            rels = re.findall(r"^- (\S+)$", self._section(p, "Relations available", "Choose"), re.M)
            k = int(re.search(r"Choose at most (\d+)", p).group(1))
            text = "RELATIONS: " + ", ".join(rels[:k])
        elif role == "kg_inference":
            m = re.search(rf"—{re.escape(self.ANSWER_REL)}→ (.+?) \(", self._section(p, "Facts:", "Earlier findings:"))
            text = f"SUFFICIENT: yes\nANSWER: {m.group(1)}" if m else "SUFFICIENT: no\nNEXT_ENTITY: none"
        elif role == "rag_inference":
            topic = re.search(r"topic (\d+)\?", p)
            m = topic and re.search(rf"topic {topic.group(1)}: the answer is ([^.]+)\.",
                                    self._section(p, "Passages:", "Earlier findings:"))
            text = f"SUFFICIENT: yes\nANSWER: {m.group(1)}" if m else "SUFFICIENT: no"
        elif role == "judge":
            kg = re.search(r"Knowledge-graph agent answer \(([^)]*)\): (.*)", p)
            rag = re.search(r"Text agent answer \(([^)]*)\): (.*)", p)
            if kg.group(1) == "from graph facts":
                ans = kg.group(2)
            elif rag.group(1) == "from passages":
                ans = rag.group(2)
            else:
                ans = kg.group(2)
            text = f"ANSWER: {ans}\nNEXT_SUBQUESTION: none\nDONE: yes"
        elif role == "verifier":
            m = re.findall(r"Judged answer: (.*)", p)
            text = f"SUFFICIENT: yes\nANSWER: {m[-1]}" if m and m[-1] != "unknown" else "SUFFICIENT: no"
        else:  # cot
            text = "ANSWER: unknown"
        return Completion(text, len(p.split()), len(text.split()), estimated=True)


def synthetic_qa(n: int, rag_every: int = 3, distractors: int = 2):
    """n examples; example i's crucial triple is (m.q{i}, synthetic.answer, m.a{i}).

    Every ``rag_every``-th example also has a corpus article stating the answer.
    Returns (KnowledgeGraph, dataset examples, corpus documents, rag-covered ids).
    """
    from mixdebate.evaluation import DatasetExample
    from mixdebate.records import TopicRef
    from mixdebate.textindex import Document

    triples, names, dataset, docs, covered = [], {}, [], [], set()
    for i in range(n):
        q, a = f"m.q{i}", f"m.a{i}"
        names[q], names[a] = f"Topic {i}", f"Answer {i}"
        crucial = Triple(q, EvidenceReadingProvider.ANSWER_REL, a)
        triples.append(crucial)
        for d in range(distractors):
            x = f"m.x{i}_{d}"
            names[x] = f"Other {i} {d}"
            triples.append(Triple(q, f"synthetic.related_{d}", x))
        dataset.append(DatasetExample(
            f"ex{i}", f"What is the answer for topic {i}?", (f"Answer {i}",),
            (TopicRef(f"Topic {i}", q),), (crucial,),
        ))
        if i % rag_every == 0:
            covered.add(f"ex{i}")
            docs.append(Document(f"doc{i}", f"Topic {i}", f"Notes on topic {i}: the answer is Answer {i}."))
    return KnowledgeGraph(triples, names), dataset, docs, covered


class AdversarialProvider:
    """Never sufficient, always asks a fresh sub-question; replies stay well-formed.

    Choices (entities, relations, next hops, sub-question counts) are drawn from
    a seeded RNG, and every reply names only ids the prompt actually offered.
    """

    def __init__(self, seed: int, mentions: list[str]):
        self.rng = random.Random(seed)
        self.mentions = mentions
        self.n = 0
        self._lock = threading.Lock()

    def complete(self, request: LlmRequest, caller: str = "") -> Completion:
        role, p = request.role.value, request.rendered_prompt
        with self._lock:
            self.n += 1
            rng, n = self.rng, self.n
            if role == "plan":
                subs = "\n".join(f"SUBQUESTION: planned step {j}?" for j in range(rng.randint(1, 9)))
                text = f"{subs}\nENTITIES: {', '.join(rng.sample(self.mentions, 2))}"
            elif role == "entity_select":
                ids = re.findall(r"^- (\S+) \|", p, re.M)
                text = f"ENTITY: {rng.choice(ids)}" if ids and rng.random() < 0.9 else "ENTITY: none"
            elif role == "relation_select":
                rels = re.findall(r"^- (\S+)$", EvidenceReadingProvider._section(p, "Relations available", "Choose"),
                                  re.M)
                text = "RELATIONS: " + ", ".join(rng.sample(rels, rng.randint(1, min(3, len(rels)))))
            elif role == "kg_inference":
                facts = EvidenceReadingProvider._section(p, "Facts:", "Earlier findings:")
                ids = sorted(set(re.findall(r"\((m\.[^()\s]+)\)", facts)))
                text = f"SUFFICIENT: no\nNEXT_ENTITY: {rng.choice(ids)}"
            elif role in ("rag_inference", "verifier"):
                text = "SUFFICIENT: no"
            elif role == "judge":
                text = (f"ANSWER: guess {n}\nENTITIES: {rng.choice(self.mentions)}\n"
                        f"NEXT_SUBQUESTION: a brand new angle {n}?\nDONE: no")
            else:
                text = f"ANSWER: cot {n}"
        return Completion(text, len(p.split()), len(text.split()), estimated=True)
