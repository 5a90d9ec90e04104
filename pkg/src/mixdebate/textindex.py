"""Document corpus, word chunking, embedders and exact cosine top-k retrieval."""
from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from os import PathLike
from typing import Iterable, Protocol, Sequence

import httpx
import numpy as np

from . import kernels
from .errors import BackendError, DatasetError


@dataclass(frozen=True)
class Document:
    doc_id: str
    title: str
    body: str


@dataclass(frozen=True)
class Chunk:
    doc_id: str
    ordinal: int
    text: str
    token_count: int


def tokenize(text: str) -> list[str]:
    """Whitespace-delimited words."""
    return text.split()


def chunk(doc: Document, chunk_size: int = 500) -> list[Chunk]:
    """Greedy fixed-size split of the document's word stream."""
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")
    tokens = tokenize(doc.body)
    return [
        Chunk(doc.doc_id, ordinal, " ".join(piece), len(piece))
        for ordinal, piece in enumerate(
            tokens[start:start + chunk_size] for start in range(0, len(tokens), chunk_size)
        )
    ]


# -- embedders -------------------------------------------------------------------

class Embedder(Protocol):
    dim: int

    def embed(self, text: str) -> np.ndarray: ...

    def prepare(self, texts: Sequence[str]): ...

    def scores(self, query: str, prepared) -> np.ndarray: ...


def normalize_text(text: str) -> str:
    collapsed = " ".join(text.lower().split())
    return f" {collapsed} " if collapsed else ""


class HashingEmbedder:
    """Character 3-gram counts hashed into ``dim`` buckets.

    Scoring works on the raw integer counts, so ranking is exact and
    reproducible; ``embed`` returns the L2-normalized float view.
    """

    def __init__(self, dim: int = 256):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim

    def counts(self, text: str) -> np.ndarray:
        return kernels.trigram_counts(normalize_text(text), self.dim)

    def embed(self, text: str) -> np.ndarray:
        c = self.counts(text).astype(np.float64)
        norm = np.sqrt(c @ c)
        return c / norm if norm > 0 else c

    def prepare(self, texts: Sequence[str]) -> np.ndarray:
        return kernels.trigram_count_matrix([normalize_text(t) for t in texts], self.dim)

    def scores(self, query: str, prepared: np.ndarray) -> np.ndarray:
        if prepared.shape[0] == 0:
            return np.zeros(0)
        return kernels.count_cosine(self.counts(query), prepared)


class RemoteEmbedder:
    """OpenAI-compatible ``/embeddings`` client with a per-text cache."""

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key_env: str = "DOM_API_KEY",
        *,
        timeout: float = 30.0,
        retries: int = 3,
        client: httpx.Client | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self.retries = max(1, retries)
        self._client = client or httpx.Client(timeout=timeout)
        self._cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()
        self.dim = 0

    def _request(self, texts: list[str]) -> list[np.ndarray]:
        headers = {}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        last: BackendError | None = None
        for _ in range(self.retries):
            try:
                resp = self._client.post(
                    f"{self.base_url}/embeddings",
                    json={"model": self.model, "input": texts},
                    headers=headers,
                )
            except httpx.HTTPError as exc:
                last = BackendError(f"embedding request failed: {exc}")
                continue
            if resp.status_code != 200:
                last = BackendError(
                    f"embedding endpoint returned {resp.status_code}: {resp.text[:200]}",
                    status=resp.status_code,
                    retriable=resp.status_code >= 500 or resp.status_code == 429,
                )
                if not last.retriable:
                    raise last
                continue
            data = sorted(resp.json()["data"], key=lambda d: d.get("index", 0))
            return [np.asarray(d["embedding"], dtype=np.float64) for d in data]
        assert last is not None
        raise BackendError(f"{last} (after {self.retries} attempts)", status=last.status, retriable=False)

    def embed_many(self, texts: Sequence[str]) -> np.ndarray:
        with self._lock:
            todo = [t for t in dict.fromkeys(texts) if t and t not in self._cache]
        if todo:
            vectors = self._request(todo)
            with self._lock:
                for text, vec in zip(todo, vectors):
                    norm = np.linalg.norm(vec)
                    self._cache[text] = vec / norm if norm > 0 else vec
                    self.dim = vec.shape[0]
        rows = [self._cache.get(t) if t else None for t in texts]
        dim = self.dim or 1
        return np.stack([r if r is not None else np.zeros(dim) for r in rows]) if rows else np.zeros((0, dim))

    def embed(self, text: str) -> np.ndarray:
        return self.embed_many([text])[0]

    def prepare(self, texts: Sequence[str]) -> np.ndarray:
        return self.embed_many(list(texts))

    def scores(self, query: str, prepared: np.ndarray) -> np.ndarray:
        if prepared.shape[0] == 0:
            return np.zeros(0)
        return prepared @ self.embed(query)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(a @ b / (na * nb))


# -- ranking ---------------------------------------------------------------------------

class SimilarityIndex:
    """Candidate strings embedded once, searched many times."""

    def __init__(self, candidates: Sequence[str], embedder: Embedder | None = None):
        self.candidates = list(candidates)
        self.embedder = embedder or HashingEmbedder()
        self._prepared = self.embedder.prepare(self.candidates)

    def __len__(self) -> int:
        return len(self.candidates)

    def search(self, query: str, k: int) -> list[tuple[int, float]]:
        if k < 1:
            raise ValueError("k must be >= 1")
        if not self.candidates:
            return []
        idx, scores = kernels.top_k(self.embedder.scores(query, self._prepared), k)
        return [(int(i), float(s)) for i, s in zip(idx, scores)]


def top_k_similar(
    query: str, candidates: Sequence[str], k: int, embedder: Embedder | None = None
) -> list[tuple[int, float]]:
    """Rank candidates by cosine similarity to ``query``; ties go to the lower index."""
    return SimilarityIndex(candidates, embedder).search(query, k)


# -- corpus -------------------------------------------------------------------------

class Corpus:
    def __init__(self, documents: Iterable[Document] = (), embedder: Embedder | None = None):
        self.documents: list[Document] = []
        seen = set()
        for doc in documents:
            if doc.doc_id in seen:
                raise DatasetError(f"duplicate doc_id {doc.doc_id!r}")
            seen.add(doc.doc_id)
            self.documents.append(doc)
        self.embedder = embedder or HashingEmbedder()
        self._titles = SimilarityIndex([d.title for d in self.documents], self.embedder)

    def __len__(self) -> int:
        return len(self.documents)

    def retrieve_documents(self, topic_entity_name: str, k: int = 3) -> list[Document]:
        return [self.documents[i] for i, _ in self._titles.search(topic_entity_name, k)]


def retrieve_documents(corpus: Corpus, topic_entity_name: str, k: int = 3) -> list[Document]:
    return corpus.retrieve_documents(topic_entity_name, k)


def load_corpus(path: str | PathLike, embedder: Embedder | None = None) -> Corpus:
    """Read a JSON Lines corpus of ``{"doc_id", "title", "body"}`` objects."""
    docs = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                docs.append(Document(str(obj["doc_id"]), str(obj["title"]), str(obj.get("body", ""))))
            except (ValueError, KeyError, TypeError) as exc:
                raise DatasetError(f"{path}:{line_no}: bad corpus record ({exc})") from exc
    return Corpus(docs, embedder)
