import io
import json
import random

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from helpers import CASE_DIR, CASE_QUESTION, AdversarialProvider, random_kg
from mixdebate.config import RunConfig
from mixdebate.llm import ScriptedProvider
from mixdebate.orchestrator import DebateEngine
from mixdebate.pipeline import build_engine
from mixdebate.records import TopicRef
from mixdebate.textindex import Corpus, Document
from mixdebate.trace import Recorder, frozen_clock

JUDGE_DONE = "ANSWER: {a}\nNEXT_SUBQUESTION: none\nDONE: yes"
JUDGE_GO = "ANSWER: {a}\nNEXT_SUBQUESTION: none\nDONE: no"


def engine(kg, corpus, script, **cfg):
    provider = ScriptedProvider(script)
    return build_engine(RunConfig(**cfg), kg, corpus, provider), provider


def run(eng, question="q?", topics=None):
    return eng.run(question, topics, Recorder(clock=frozen_clock))


class TestPlan:
    def test_two_lines(self, case_kg, case_corpus):
        eng, _ = engine(case_kg, case_corpus, {"plan": ["SUBQUESTION: a?\nSUBQUESTION: b?"]})
        plan = eng.plan("q?", Recorder(clock=frozen_clock))
        assert plan.texts() == ["a?", "b?"]
        assert all(s.status == "pending" for s in plan.subquestions)

    def test_empty_decomposition(self, case_kg, case_corpus):
        eng, _ = engine(case_kg, case_corpus, {"plan": ["I cannot decompose this."]})
        assert eng.plan("q?", Recorder(clock=frozen_clock)).texts() == ["q?"]

    def test_failure_degenerates(self, case_kg, case_corpus):
        eng, _ = engine(case_kg, case_corpus, {})
        rec = Recorder(clock=frozen_clock)
        assert eng.plan("q?", rec).texts() == ["q?"]
        assert "plan_failed" in rec.flags()

    def test_truncated_to_i(self, case_kg, case_corpus):
        eng, _ = engine(case_kg, case_corpus, {"plan": ["\n".join(f"SUBQUESTION: s{i}?" for i in range(9))]}, I=4)
        assert len(eng.plan("q?", Recorder(clock=frozen_clock)).subquestions) == 4

    def test_case_study_plan(self, case_kg, case_corpus):
        eng, _ = engine(case_kg, case_corpus, json.loads((CASE_DIR / "script.json").read_text()))
        assert eng.plan(CASE_QUESTION, Recorder(clock=frozen_clock)).texts() == [
            "Which films feature Armie Hammer?",
            "Which of those films was selected for the National Film Registry?",
        ]

    def test_empty_question(self, case_kg, case_corpus):
        eng, _ = engine(case_kg, case_corpus, {})
        with pytest.raises(ValueError):
            eng.plan("  ", Recorder())


def base_script(judge, **extra):
    script = {
        "plan": ["SUBQUESTION: s1?\nSUBQUESTION: s2?\nSUBQUESTION: s3?"],
        "relation_select": ["RELATIONS: film.actor.film"] * 6,
        "kg_inference": ["SUFFICIENT: yes\nANSWER: kg answer"] * 6,
        "rag_inference": ["SUFFICIENT: yes\nANSWER: rag answer"] * 6,
        "judge": judge,
        "verifier": ["SUFFICIENT: yes\nANSWER: final"],
    }
    script.update(extra)
    return script


ARMIE = [TopicRef("Armie Hammer", "m.0ah")]


class TestJudge:
    def test_agree_proceeds(self, case_kg, case_corpus):
        eng, _ = engine(case_kg, case_corpus, base_script([JUDGE_GO.format(a="same")] * 3))
        res = run(eng, topics=ARMIE)
        assert len(res.memory) == 3

    def test_disagree_picks_rag(self, case_kg, case_corpus):
        eng, _ = engine(case_kg, case_corpus, base_script([JUDGE_DONE.format(a="rag answer")]))
        res = run(eng, topics=ARMIE)
        rec = res.memory[0]
        assert rec.kg_answer.answer_text == "kg answer"
        assert rec.judged_answer == rec.rag_answer.answer_text == "rag answer"

    def test_done_early(self, case_kg, case_corpus):
        eng, _ = engine(case_kg, case_corpus, base_script([JUDGE_DONE.format(a="x")]))
        res = run(eng, topics=ARMIE)
        assert len(res.memory) == 1 and res.final.iterations_used == 1
        assert [s.status for s in res.plan.subquestions] == ["answered", "pending", "pending"]

    def test_revises_next(self, case_kg, case_corpus):
        judge = ["ANSWER: x\nNEXT_SUBQUESTION: revised?\nDONE: no", JUDGE_DONE.format(a="y")]
        eng, _ = engine(case_kg, case_corpus, base_script(judge))
        res = run(eng, topics=ARMIE)
        assert [r.subquestion for r in res.memory] == ["s1?", "revised?"]
        assert res.plan.subquestions[1].status == "answered"

    def test_appends_when_plan_exhausted(self, case_kg, case_corpus):
        judge = ["ANSWER: x\nNEXT_SUBQUESTION: extra?\nDONE: no", JUDGE_DONE.format(a="y")]
        eng, _ = engine(case_kg, case_corpus, base_script(judge, plan=["SUBQUESTION: only?"]))
        res = run(eng, topics=ARMIE)
        assert [r.subquestion for r in res.memory] == ["only?", "extra?"]

    def test_judged_answer_drives_topics(self, case_kg, case_corpus):
        judge = ["ANSWER: The Social Network\nNEXT_SUBQUESTION: none\nDONE: no", JUDGE_DONE.format(a="y")]
        eng, _ = engine(case_kg, case_corpus, base_script(judge, entity_select=["ENTITY: m.0tsn"]))
        res = run(eng, topics=ARMIE)
        assert res.memory[0].topic_entities_out == ("The Social Network",)
        it2 = [e for e in res.recorder.events if e.kind == "iteration"][1]
        assert it2.payload["topics"] == ["The Social Network"]

    def test_judge_failure_defaults_to_kg(self, case_kg, case_corpus):
        eng, _ = engine(case_kg, case_corpus, base_script(["??", "??"], plan=["SUBQUESTION: only?"]))
        res = run(eng, topics=ARMIE)
        assert res.memory[0].judged_answer == "kg answer"
        assert "judge_failed" in res.recorder.flags()


class TestFinalize:
    def test_verified(self, case_kg, case_corpus):
        eng, _ = engine(case_kg, case_corpus, base_script([JUDGE_DONE.format(a="x")]))
        res = run(eng, topics=ARMIE)
        assert (res.final.text, res.final.mode) == ("final", "verified")

    def test_empty_memory_insufficient_uses_q_only(self, case_kg, case_corpus):
        eng, _ = engine(case_kg, case_corpus, {"verifier": ["SUFFICIENT: no"], "cot": ["ANSWER: c"]})
        rec = Recorder(clock=frozen_clock)
        out = eng.finalize("the question?", [], rec)
        assert (out.text, out.mode, out.iterations_used) == ("c", "cot", 0)
        cot = [e for e in rec.events if e.kind == "llm_call" and e.payload["role"] == "cot"][0]
        assert "the question?" in cot.payload["prompt"] and cot.payload["temperature"] == 0.0
        assert "Judged answer" not in cot.payload["prompt"]

    def test_verifier_overrides_memory(self, case_kg, case_corpus):
        script = base_script([JUDGE_DONE.format(a="memory says A")],
                             verifier=["SUFFICIENT: yes\nANSWER: verifier says B"])
        res = run(engine(case_kg, case_corpus, script)[0], topics=ARMIE)
        assert res.memory[-1].judged_answer == "memory says A"
        assert res.final.text == "verifier says B"

    def test_verifier_failure_goes_cot(self, case_kg, case_corpus):
        eng, _ = engine(case_kg, case_corpus, {"verifier": ["x", "y"], "cot": ["ANSWER: c"]})
        out = eng.finalize("q?", [], Recorder(clock=frozen_clock))
        assert out.mode == "cot" and out.flags == ("verifier_failed",)


class TestRun:
    def test_one_subquestion(self, case_kg, case_corpus):
        script = base_script([JUDGE_DONE.format(a="x")], plan=["SUBQUESTION: only?"])
        res = run(engine(case_kg, case_corpus, script)[0], topics=ARMIE)
        assert len(res.memory) == 1 and res.final.iterations_used == 1

    def test_case_study(self, case_kg, case_corpus):
        eng, provider = engine(case_kg, case_corpus, json.loads((CASE_DIR / "script.json").read_text()))
        res = run(eng, CASE_QUESTION)
        assert res.final.text == "The Social Network" and res.final.mode == "verified"
        assert len(res.memory) == 2
        assert res.memory[0].kg_answer.source == "kg"
        assert res.memory[0].judged_answer == res.memory[0].kg_answer.answer_text
        assert res.memory[1].kg_answer.source == "cot_fallback"
        assert res.memory[1].rag_answer.source == "rag"
        assert res.memory[1].judged_answer == res.memory[1].rag_answer.answer_text
        assert len(res.ledger) == provider.consumed == 17
        assert all(n == 0 for n in provider.remaining().values())

    @pytest.mark.parametrize("parallel", [True, False])
    def test_replay_determinism(self, case_kg, case_corpus, parallel):
        outs = []
        for _ in range(2):
            eng, _ = engine(case_kg, case_corpus, json.loads((CASE_DIR / "script.json").read_text()),
                            parallel_agents=parallel)
            res = run(eng, CASE_QUESTION)
            buf = io.StringIO()
            res.recorder.write_jsonl(buf)
            outs.append((buf.getvalue(), json.dumps(res.memory_tuples())))
        assert outs[0] == outs[1]

    def test_single_agent_modes(self, case_kg, case_corpus):
        script = {"plan": ["SUBQUESTION: only?"], "relation_select": ["RELATIONS: film.actor.film"],
                  "kg_inference": ["SUFFICIENT: yes\nANSWER: k"], "verifier": ["SUFFICIENT: yes\nANSWER: k"]}
        res = run(engine(case_kg, case_corpus, script, agents="kg")[0], topics=ARMIE)
        assert res.memory[0].rag_answer is None and res.memory[0].judged_answer == "k"
        assert "judge" not in res.ledger.calls_by_role()

    def test_needs_agents(self, case_kg):
        from mixdebate.llm import LlmGateway
        with pytest.raises(ValueError):
            DebateEngine(None, None, LlmGateway(ScriptedProvider({})), RunConfig())


def adversarial_setup(seed):
    rng = random.Random(seed)
    kg = random_kg(rng, rng.randrange(0, 200))
    names = [n for _, n in kg.entity_names()]
    docs = [Document(str(i), rng.choice(names), " ".join(rng.choice(names) for _ in range(30)))
            for i in range(rng.randrange(0, 6))]
    return kg, Corpus(docs), names


@given(seed=st.integers(0, 10 ** 9), W=st.integers(1, 4), I=st.integers(1, 7))
@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
def test_termination_and_call_budget(seed, W, I):
    kg, corpus, names = adversarial_setup(seed)
    cfg = RunConfig(W=W, I=I)
    provider = AdversarialProvider(seed, names)
    eng = build_engine(cfg, kg, corpus, provider)
    res = eng.run("adversarial?", None, Recorder(clock=frozen_clock))
    assert res.final.iterations_used == len(res.memory) == I
    assert res.final.mode == "cot"
    assert len(res.plan.subquestions) <= I
    subs = [e.payload["subquestion"] for e in res.recorder.events if e.kind == "iteration"]
    assert [r.subquestion for r in res.memory] == subs
    per_iter = {}
    for e in res.recorder.events:
        if e.kind == "llm_call" and e.payload["role"] == "kg_inference":
            per_iter[e.iteration] = per_iter.get(e.iteration, 0) + 1
    assert all(n <= W for n in per_iter.values())
    # computed budget: plan + I * (per-topic linking + W steps of relation picks and inference + rag + 2 cot + judge)
    topics_max = 2
    per_iteration = topics_max * 2 + W * (topics_max * 2 + 2) + 2 + 2 + 2 + 2
    assert len(res.ledger) <= 2 + I * per_iteration + 2 * 2
    assert len(res.ledger) == provider.n
