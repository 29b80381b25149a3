from __future__ import annotations

import random

import pytest

from loopsmith.prompts import (
    DEFAULT_PROTOCOL,
    EmptyExcerpt,
    EmptyRequest,
    PromptSpec,
    TagProtocol,
    TemplateVersion,
    build_initial_prompt,
    build_repair_prompt,
    lint_request_language,
    template_text,
)

FIG4_SENTENCE = (
    "Based on this request, please generate the code in java within the "
    "[CODE]...[/CODE] tag and the test code within the [TEST]...[/TEST] tag."
)


def test_v1_contains_markers_and_request():
    prompt = build_initial_prompt(PromptSpec("Create a stack", TemplateVersion.V1_TAGS))
    assert "[CODE]" in prompt
    assert "[/TEST]" in prompt
    assert "Create a stack" in prompt


def test_v5_contains_natural_language_prohibition():
    prompt = build_initial_prompt(PromptSpec("anything", TemplateVersion.V5_FINAL))
    assert "Do not respond in natural language." in prompt
    assert "Please output the time when the last generation finished." in prompt


def test_v3_contains_end_sentinel_sentence():
    prompt = build_initial_prompt(PromptSpec("anything", TemplateVersion.V3_END_SENTINEL))
    assert "Please generate [END] after generating [/TEST]." in prompt


def test_v2_contains_test_close_reminder():
    assert "Be sure to add the [/TEST] tag." in template_text(TemplateVersion.V2_TEST_REMINDER)


def test_v1_reproduces_recorded_sentence_for_default_language():
    assert template_text(TemplateVersion.V1_TAGS) == FIG4_SENTENCE


def test_all_versions_contain_all_four_markers():
    for version in TemplateVersion:
        text = template_text(version)
        for marker in DEFAULT_PROTOCOL.markers:
            assert marker in text, (version, marker)


def test_template_determinism():
    spec = PromptSpec("Create a text-based Tetris", TemplateVersion.V4_TIME_FOOTER)
    first = build_initial_prompt(spec)
    assert all(build_initial_prompt(spec) == first for _ in range(1000))


def test_language_substitution_is_verbatim_for_non_default():
    text = template_text(TemplateVersion.V1_TAGS, language="Kotlin")
    assert "the code in Kotlin within" in text
    spec = PromptSpec("make a queue", TemplateVersion.V1_TAGS, target_language_name="Kotlin")
    assert "Kotlin" in build_initial_prompt(spec)


def test_request_embedded_verbatim_exactly_once():
    rng = random.Random(7)
    alphabet = "qwxyz0189 #@!?"
    for _ in range(200):
        request = "".join(rng.choice(alphabet) for _ in range(rng.randint(12, 60))).strip() or "qq"
        version = rng.choice(list(TemplateVersion))
        if request in template_text(version):
            continue
        prompt = build_initial_prompt(PromptSpec(request, version))
        assert prompt.count(request) == 1


def test_blank_request_rejected():
    with pytest.raises(EmptyRequest):
        PromptSpec("   \n\t")
    with pytest.raises(EmptyRequest):
        PromptSpec("")


def test_repair_prompt_embeds_parts_in_order():
    prompt = build_repair_prompt("class A{}", "class ATest{}", "expected 3 but was 4")
    positions = [
        prompt.index("class A{}"),
        prompt.index("class ATest{}"),
        prompt.index("expected 3 but was 4"),
        prompt.index("Modify the code based on the errors"),
    ]
    assert positions == sorted(positions)
    # the protocol restatement follows the instruction
    restatement = prompt.index("[CODE]...[/CODE]")
    assert restatement > positions[-1]


def test_repair_prompt_requires_excerpt():
    with pytest.raises(EmptyExcerpt):
        build_repair_prompt("class A{}", "class ATest{}", "")


def test_repair_prompt_requires_code():
    with pytest.raises(ValueError):
        build_repair_prompt("  ", "class ATest{}", "boom")


def test_repair_prompt_respects_custom_protocol():
    protocol = TagProtocol("<code>", "</code>", "<test>", "</test>")
    prompt = build_repair_prompt("a", "b", "c", protocol)
    assert "<code>...</code>" in prompt
    assert "<test>...</test>" in prompt


def test_lint_ascii_request_is_clean():
    assert lint_request_language("Create a text-based Tetris") == []


def test_lint_flags_non_ascii():
    warnings = lint_request_language("テトリスを作成してください")
    assert len(warnings) == 1
    assert warnings[0].index == 0
    assert "token" in warnings[0].message


def test_lint_empty_request_is_clean():
    assert lint_request_language("") == []


def test_tag_protocol_validation():
    with pytest.raises(ValueError):
        TagProtocol(code_open="", code_close="[/CODE]")
    with pytest.raises(ValueError):
        TagProtocol(code_open="[X]", code_close="[X]")
    with pytest.raises(ValueError):
        TagProtocol(code_open="[C]", code_close="[/C]", test_open="A[C]B", test_close="[/T]")
    TagProtocol()  # defaults are valid
