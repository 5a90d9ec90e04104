"""Command-line driver: ask, eval, prepare-ikg, trace.

Exit codes: 0 success, 2 usage/config error, 3 backend hard failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from collections import Counter
from pathlib import Path

from .config import RunConfig, load_config
from .errors import BackendError, ConfigError, MixDebateError
from .evaluation import load_dataset, prepare_ikg, run_eval
from .kg.sparql import SparqlBackend
from .kg.store import load_kg, read_names, write_triples
from .llm.ledger import ledger_report
from .llm.providers import HttpProvider, ScriptedProvider
from .pipeline import build_engine, make_embedder
from .records import TopicRef, memory_as_tuples
from .textindex import Corpus, load_corpus
from .trace import Recorder, frozen_clock

log = logging.getLogger("mixdebate")

EXIT_OK, EXIT_USAGE, EXIT_BACKEND = 0, 2, 3


class UsageError(Exception):
    pass


def _require_file(path: str | None, flag: str) -> Path:
    if not path:
        raise UsageError(f"{flag} is required")
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{flag}: no such file: {path}")
    return p


def _load_config(args) -> RunConfig:
    config = load_config(_require_file(args.config, "--config") if args.config else None)
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    return config


def _load_corpus(args, config: RunConfig) -> Corpus:
    embedder = make_embedder(config.embedder)
    if args.corpus:
        return load_corpus(_require_file(args.corpus, "--corpus"), embedder)
    return Corpus([], embedder)


def _load_kg(args, config: RunConfig):
    names_path = _require_file(args.names, "--names") if args.names else None
    if getattr(args, "sparql", None):
        opts = dict(config.sparql or {})
        return SparqlBackend(
            args.sparql,
            prefix=opts.get("prefix", "http://rdf.freebase.com/ns/"),
            names=read_names(names_path) if names_path else {},
            timeout=float(opts.get("timeout", 10.0)),
            retries=int(opts.get("retries", 3)),
        )
    return load_kg(_require_file(args.kg, "--kg"), names_path)


def _script(args):
    """Return (provider factory, shared?) for the --script/--provider choice."""
    if args.script:
        data = json.loads(_require_file(args.script, "--script").read_text(encoding="utf-8"))
        if isinstance(data, dict) and "examples" in data:
            per = data["examples"]
            shared = data.get("shared", {})
            return (lambda ex, ratio: ScriptedProvider({**shared, **per.get(ex.id, {})})), False
        provider = ScriptedProvider(data)
        return (lambda ex, ratio: provider), True
    return None, False


def _http_provider(args, config: RunConfig):
    spec = dict(config.provider or {})
    return HttpProvider(spec.get("base_url"), args.model or spec.get("model", "deepseek-chat"),
                        spec.get("api_key_env", "DOM_API_KEY"))


def _clock(args):
    return time.perf_counter if (args.wall_clock or not args.script) else frozen_clock


def _topics(values) -> list[TopicRef]:
    out = []
    for v in values or []:
        mid, _, name = v.partition("=")
        out.append(TopicRef(name or mid, mid if name else None) if name else TopicRef(mid))
    return out


def cmd_ask(args) -> int:
    config = _load_config(args)
    if not args.sparql:
        _require_file(args.kg, "--kg")
    kg = _load_kg(args, config)
    corpus = _load_corpus(args, config)
    if args.script:
        provider = ScriptedProvider.from_file(_require_file(args.script, "--script"))
    else:
        provider = _http_provider(args, config)
    engine = build_engine(config, kg, corpus, provider)
    recorder = Recorder(clock=_clock(args))
    result = engine.run(args.question, _topics(args.topic) or None, recorder)
    if args.trace_out:
        with open(args.trace_out, "w", encoding="utf-8") as fh:
            recorder.write_jsonl(fh)
    if args.memory_out:
        with open(args.memory_out, "w", encoding="utf-8") as fh:
            json.dump({"question": args.question, "final": result.final.text, "mode": result.final.mode,
                       "memory": memory_as_tuples(result.memory)}, fh, indent=2, ensure_ascii=False)
            fh.write("\n")
    print(result.final.text)
    if args.verbose:
        for i, (q, kg_a, rag_a, a) in enumerate(memory_as_tuples(result.memory), start=1):
            print(f"[{i}] {q}\n    kg: {kg_a}\n    rag: {rag_a}\n    judged: {a}", file=sys.stderr)
        rep = ledger_report(recorder.ledger)
        print(f"mode={result.final.mode} iterations={result.final.iterations_used} "
              f"calls={rep['total_calls']} tokens={rep['total_tokens']}", file=sys.stderr)
    return EXIT_BACKEND if result.final.failed else EXIT_OK


def _ratios(text: str) -> list[float]:
    try:
        ratios = [float(r) for r in text.split(",") if r.strip()]
    except ValueError as exc:
        raise UsageError(f"--ratios: {exc}") from exc
    if not ratios or any(not 0 <= r <= 1 for r in ratios):
        raise UsageError("--ratios must be comma-separated fractions in [0, 1]")
    return ratios


def cmd_eval(args) -> int:
    config = _load_config(args)
    dataset = load_dataset(_require_file(args.dataset, "--dataset"))
    if not dataset:
        raise UsageError("empty dataset")
    ratios = _ratios(args.ratios)
    kg = load_kg(_require_file(args.kg, "--kg"), _require_file(args.names, "--names") if args.names else None)
    corpus = _load_corpus(args, config)
    factory, shared = _script(args)
    jobs = args.jobs
    if factory is None:
        provider = _http_provider(args, config)
        factory = lambda ex, ratio: provider
    elif shared and jobs > 1:
        log.warning("a single shared script is consumed in order; running with --jobs 1")
        jobs = 1
    report = run_eval(dataset, kg, corpus, config, ratios, config.seed, factory, jobs=jobs, clock=_clock(args))
    if args.report_out:
        Path(args.report_out).write_text(report.to_json(), encoding="utf-8")
    if args.trace_out:
        with open(args.trace_out, "w", encoding="utf-8") as fh:
            report.write_traces(fh)
    for row in report.levels:
        print(f"ratio={row.ratio:.2f} hits@1={row.hits_at_1:.4f} correct={row.correct}/{row.total} "
              f"removed={row.removed} calls={row.calls} tokens={row.tokens}")
    return EXIT_OK


def cmd_prepare_ikg(args) -> int:
    kg = load_kg(_require_file(args.kg, "--kg"))
    dataset = load_dataset(_require_file(args.dataset, "--dataset"))
    if not 0 <= args.ratio <= 1:
        raise UsageError("--ratio must lie in [0, 1]")
    degraded, removed = prepare_ikg(kg, dataset, args.ratio, args.seed)
    write_triples(degraded.triples, args.out)
    manifest = args.manifest or f"{args.out}.removed.tsv"
    write_triples(removed, manifest)
    print(f"kept {len(degraded)} of {len(kg)} triples; removed {len(removed)} -> {manifest}")
    return EXIT_OK


def cmd_trace(args) -> int:
    path = _require_file(args.path, "trace")
    kinds, roles, flags = Counter(), Counter(), Counter()
    tokens = 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            ev = json.loads(line)
            kinds[(ev["module"], ev["kind"])] += 1
            payload = ev.get("payload", {})
            if ev["kind"] == "llm_call":
                roles[payload["role"]] += 1
                tokens += payload.get("prompt_tokens", 0) + payload.get("completion_tokens", 0)
            elif ev["kind"] == "flag":
                flags[payload.get("flag")] += 1
    print(f"events={sum(kinds.values())} llm_calls={sum(roles.values())} tokens={tokens}")
    for role, n in sorted(roles.items()):
        print(f"  call {role}: {n}")
    for (module, kind), n in sorted(kinds.items()):
        print(f"  event {module}.{kind}: {n}")
    for flag, n in sorted(flags.items(), key=lambda kv: str(kv[0])):
        print(f"  flag {flag}: {n}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixdebate", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def backends(p, kg_required=True):
        p.add_argument("--kg", help="triples TSV")
        p.add_argument("--names", help="entity names TSV")
        p.add_argument("--corpus", help="documents JSONL")
        p.add_argument("--config", help="RunConfig JSON")
        src = p.add_mutually_exclusive_group()
        src.add_argument("--script", help="scripted provider JSON")
        src.add_argument("--provider", choices=["http"], help="use the OpenAI-compatible HTTP provider")
        p.add_argument("--model", help="model name for the HTTP provider")
        p.add_argument("--trace-out", help="write the JSONL trace here")
        p.add_argument("--wall-clock", action="store_true", help="record real timings even when scripted")

    ask = sub.add_parser("ask", help="answer one question")
    ask.add_argument("question")
    backends(ask)
    ask.add_argument("--sparql", help="SPARQL endpoint URL to use instead of --kg")
    ask.add_argument("--topic", action="append", help="topic entity as MID=name or a bare mention (repeatable)")
    ask.add_argument("--memory-out", help="write final answer and memory tuples as JSON")
    ask.add_argument("--seed", type=int)
    ask.set_defaults(func=cmd_ask)

    ev = sub.add_parser("eval", help="Hits@1 over a dataset at several incompleteness ratios")
    ev.add_argument("--dataset", required=True)
    backends(ev)
    ev.add_argument("--ratios", default="0")
    ev.add_argument("--seed", type=int)
    ev.add_argument("--report-out")
    ev.add_argument("--jobs", type=int, default=1)
    ev.set_defaults(func=cmd_eval)

    prep = sub.add_parser("prepare-ikg", help="remove a share of gold-path triples from a KG")
    prep.add_argument("--kg", required=True)
    prep.add_argument("--dataset", required=True)
    prep.add_argument("--ratio", type=float, required=True)
    prep.add_argument("--seed", type=int, default=0)
    prep.add_argument("--out", required=True)
    prep.add_argument("--manifest")
    prep.set_defaults(func=cmd_prepare_ikg)

    tr = sub.add_parser("trace", help="summarize a trace file")
    tr.add_argument("path")
    tr.set_defaults(func=cmd_trace)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (MixDebateError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
