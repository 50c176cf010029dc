from __future__ import annotations

import pytest

from mmagent.executor import Observation
from mmagent.grammar import parse_action
from mmagent.learner import (
    ConfigError,
    LearnerConfig,
    MemoryBank,
    MemoryEntry,
    Verdict,
    gt_compare,
    normalize_answer,
    run_attempt_loop,
    self_assess,
)
from mmagent.planner import ScriptEntry, ScriptedBackend
from mmagent.trace import ReasoningTrace, TraceStep


class CountingBackend:
    def __init__(self, replies):
        self.replies = list(replies)
        self.calls = 0

    def complete(self, prompt, stop):
        self.calls += 1
        return self.replies.pop(0)


def make_trace(answer="red", action='caption("x", visual[0])', n_initial=1):
    from mmagent.inspector import VisualResource

    trace = ReasoningTrace(mode="pie")
    for i in range(n_initial):
        trace.initial.append(
            VisualResource(index=i, kind="image", source="user",
                           location=f"{i}.png", description="img")
        )
    trace.steps.append(
        TraceStep(
            thought="look",
            action=parse_action(action),
            observation=Observation(text="the bus is red"),
            action_raw=action,
        )
    )
    trace.final_answer = answer
    return trace


# Normalizer, with the number-word oracle enumerating 0..20.

NUMBER_WORDS = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight",
    "nine", "ten", "eleven", "twelve", "thirteen", "fourteen", "fifteen",
    "sixteen", "seventeen", "eighteen", "nineteen", "twenty",
]


def test_normalizer_number_words_match_digits():
    for value, word in enumerate(NUMBER_WORDS):
        assert normalize_answer(word) == str(value)
        assert normalize_answer(f"{word} cats") == f"{value} cats"


def test_normalizer_strips_articles_case_punctuation():
    assert normalize_answer("The  United States!") == "united states"
    assert normalize_answer("a taxi") == normalize_answer("Taxi.")


def test_gt_identity_passes_without_backend():
    verdict = gt_compare(None, "taxi", "taxi")
    assert verdict.passed


def test_gt_numeral_normalization_passes():
    verdict = gt_compare(None, "two", "2")
    assert verdict.passed


def test_gt_strict_mode_fails_semantic_variants():
    backend = CountingBackend(["PASS: same thing"])
    strict = gt_compare(backend, "United States flag", "united states", strict=True)
    assert not strict.passed
    assert backend.calls == 0
    lax = gt_compare(backend, "United States flag", "united states", strict=False)
    assert lax.passed
    assert backend.calls == 1


def test_gt_requires_nonempty_texts():
    with pytest.raises(ValueError):
        gt_compare(None, "", "x")


def test_self_assess_scripted_pass():
    backend = CountingBackend(["PASS: reasoning consistent"])
    verdict = self_assess(backend, make_trace(), "what color is the bus?")
    assert verdict.passed
    assert "reasoning consistent" in verdict.critique


def test_self_assess_incomplete_without_backend_call():
    backend = CountingBackend([])
    trace = make_trace()
    trace.final_answer = None
    trace.exhausted = "step_budget"
    verdict = self_assess(backend, trace, "q")
    assert not verdict.passed
    assert "final answer" in verdict.critique
    assert backend.calls == 0


def test_self_assess_structural_prescreen_catches_bad_index():
    backend = CountingBackend([])
    trace = make_trace(action='caption("x", visual[7])')
    verdict = self_assess(backend, trace, "q")
    assert not verdict.passed
    assert "visual[7]" in verdict.critique
    assert backend.calls == 0


def test_unparseable_evaluator_reply_fails_conservatively():
    backend = CountingBackend(["hmm, looks fine I guess"])
    verdict = self_assess(backend, make_trace(), "q")
    assert not verdict.passed
    assert verdict.critique == "evaluator format error"


def test_verdict_requires_critique_on_fail():
    with pytest.raises(ValueError):
        Verdict(False, "")


def test_bank_retrieval_by_token_overlap(tmp_path):
    bank = MemoryBank(tmp_path / "bank.jsonl")
    zebra = MemoryEntry("how many zebras are there", make_trace("2"), "2", "t0")
    bus = MemoryEntry("what color is the bus", make_trace("red"), "red", "t1")
    bank.store(zebra)
    bank.store(bus)
    top = bank.retrieve("how many giraffes", k=1)
    assert top[0].query == "how many zebras are there"


def test_bank_tie_breaks_newest_first(tmp_path):
    bank = MemoryBank(tmp_path / "bank.jsonl")
    bank.store(MemoryEntry("first question", make_trace("a"), "a", "t0"))
    bank.store(MemoryEntry("second question", make_trace("b"), "b", "t1"))
    top = bank.retrieve("no overlap at all", k=2)
    assert [e.query for e in top] == ["second question", "first question"]


def test_bank_k_zero_returns_empty(tmp_path):
    bank = MemoryBank(tmp_path / "bank.jsonl")
    bank.store(MemoryEntry("q", make_trace("a"), "a", "t0"))
    assert bank.retrieve("q", k=0) == []


def test_empty_bank_retrieval():
    assert MemoryBank().retrieve("anything", k=2) == []


def test_bank_persists_and_reloads(tmp_path):
    path = tmp_path / "bank.jsonl"
    bank = MemoryBank(path)
    bank.store(MemoryEntry("persisted question", make_trace("a"), "a", "2026-01-01T00:00:00+00:00"))
    reloaded = MemoryBank(path)
    assert len(reloaded) == 1
    entry = reloaded.entries()[0]
    assert entry.query == "persisted question"
    assert entry.trace.final_answer == "a"


def test_bank_rejects_mismatched_answer(tmp_path):
    bank = MemoryBank(tmp_path / "bank.jsonl")
    with pytest.raises(ValueError):
        bank.store(MemoryEntry("q", make_trace("a"), "different", "t"))


def test_bank_rejects_inconsistent_trace(tmp_path):
    bank = MemoryBank(tmp_path / "bank.jsonl")
    bad = make_trace("a", action='caption("x", visual[9])')
    with pytest.raises(ValueError):
        bank.store(MemoryEntry("q", bad, "a", "t"))


def scripted_evaluator(replies):
    return ScriptedBackend([ScriptEntry("evaluator", r) for r in replies], role="evaluator")


def test_loop_always_fail_evaluator_flags_function_update():
    attempts = []

    def factory(n, critique):
        attempts.append((n, critique))
        return "wrong", make_trace("wrong")

    evaluator = scripted_evaluator(["FAIL: bad"] * 3)
    outcome = run_attempt_loop(
        factory, "q", LearnerConfig(mode="self_check", max_attempts=3),
        evaluator=evaluator,
    )
    assert outcome.kind == "function_update_flag"
    assert outcome.attempts_used == 3
    assert len(attempts) == 3
    assert outcome.saved_entry is None


def test_loop_pass_first_attempt_no_adjustment(tmp_path):
    bank = MemoryBank(tmp_path / "bank.jsonl")

    def factory(n, critique):
        return "red", make_trace("red")

    outcome = run_attempt_loop(
        factory, "q", LearnerConfig(mode="self_check", max_attempts=3),
        evaluator=scripted_evaluator(["PASS: fine"]), bank=bank,
    )
    assert outcome.kind == "no_adjustment"
    assert outcome.attempts_used == 1
    assert len(bank) == 0


def test_loop_pass_second_attempt_is_plan_revision_and_banks(tmp_path):
    bank = MemoryBank(tmp_path / "bank.jsonl")
    critiques = []

    def factory(n, critique):
        critiques.append(critique)
        return ("right" if n == 2 else "wrong"), make_trace("right" if n == 2 else "wrong")

    outcome = run_attempt_loop(
        factory, "q", LearnerConfig(mode="self_check", max_attempts=3),
        evaluator=scripted_evaluator(["FAIL: the caption was too vague", "PASS: good"]),
        bank=bank,
    )
    assert outcome.kind == "plan_revision"
    assert outcome.attempts_used == 2
    assert len(bank) == 1
    assert critiques == ["", "the caption was too vague"]
    assert outcome.saved_entry.trace.final_answer == "right"


def test_loop_gt_mode_skips_backend_on_exact_match():
    evaluator = scripted_evaluator([])

    def factory(n, critique):
        return "2", make_trace("2")

    outcome = run_attempt_loop(
        factory, "q", LearnerConfig(mode="gt_check", max_attempts=3),
        ground_truth="two", evaluator=evaluator,
    )
    assert outcome.kind == "no_adjustment"
    assert evaluator.consumed == 0


def test_loop_gt_mode_requires_ground_truth():
    with pytest.raises(ConfigError):
        run_attempt_loop(
            lambda n, c: ("a", make_trace("a")), "q",
            LearnerConfig(mode="gt_check", max_attempts=2),
        )


def test_loop_mode_off_runs_once_without_evaluator():
    calls = []
    evaluator = CountingBackend([])

    def factory(n, critique):
        calls.append(n)
        return "whatever", make_trace("whatever")

    outcome = run_attempt_loop(
        factory, "q", LearnerConfig(mode="off", max_attempts=5), evaluator=evaluator
    )
    assert outcome.kind == "no_adjustment"
    assert outcome.attempts_used == 1
    assert calls == [1]
    assert evaluator.calls == 0


def test_loop_exhausted_attempt_fails_without_backend():
    evaluator = CountingBackend([])

    def factory(n, critique):
        trace = make_trace()
        trace.final_answer = None
        trace.exhausted = "step_budget"
        return None, trace

    outcome = run_attempt_loop(
        factory, "q", LearnerConfig(mode="self_check", max_attempts=2),
        evaluator=evaluator,
    )
    assert outcome.kind == "function_update_flag"
    assert evaluator.calls == 0


def test_attempts_never_exceed_cap():
    for cap in (1, 2, 4):
        runs = []

        def factory(n, critique):
            runs.append(n)
            return "wrong", make_trace("wrong")

        outcome = run_attempt_loop(
            factory, "q", LearnerConfig(mode="gt_check", max_attempts=cap, strict_gt=True),
            ground_truth="right",
        )
        assert outcome.attempts_used == cap
        assert runs == list(range(1, cap + 1))
