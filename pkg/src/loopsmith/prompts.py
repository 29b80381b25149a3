"""Versioned prompt templates and assembly of initial and repair requests.

The templates evolved in five steps; each version is an immutable string and
the assembled prompt places the user's request first, followed by the preset
instruction text that pins the tag protocol.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class EmptyRequest(ValueError):
    """Raised when a prompt is requested for a blank user request."""


class EmptyExcerpt(ValueError):
    """Raised when a repair prompt is requested without an error excerpt."""


class TemplateVersion(Enum):
    V1_TAGS = "V1_TAGS"
    V2_TEST_REMINDER = "V2_TEST_REMINDER"
    V3_END_SENTINEL = "V3_END_SENTINEL"
    V4_TIME_FOOTER = "V4_TIME_FOOTER"
    V5_FINAL = "V5_FINAL"


@dataclass(frozen=True)
class TagProtocol:
    """The four markers that delimit generated code and test code."""

    code_open: str = "[CODE]"
    code_close: str = "[/CODE]"
    test_open: str = "[TEST]"
    test_close: str = "[/TEST]"

    def __post_init__(self) -> None:
        markers = (self.code_open, self.code_close, self.test_open, self.test_close)
        if any(not m for m in markers):
            raise ValueError("tag markers must be non-empty")
        if len(set(markers)) != 4:
            raise ValueError("tag markers must be pairwise distinct")
        paired = {(self.code_open, self.code_close), (self.test_open, self.test_close)}
        for a in markers:
            for b in markers:
                if a != b and a in b and (a, b) not in paired and (b, a) not in paired:
                    raise ValueError(f"marker {a!r} must not be a substring of {b!r}")

    @property
    def markers(self) -> tuple[str, str, str, str]:
        return (self.code_open, self.code_close, self.test_open, self.test_close)


DEFAULT_PROTOCOL = TagProtocol()

_BASE_INSTRUCTION = (
    "Based on this request, please generate the code in {language} within the "
    "[CODE]...[/CODE] tag and the test code within the [TEST]...[/TEST] tag."
)

_TIME_FOOTER = "Please output the time when the last generation finished."
_NO_NATURAL_LANGUAGE = "Do not respond in natural language."

_TEMPLATE_BODIES: dict[TemplateVersion, str] = {
    TemplateVersion.V1_TAGS: _BASE_INSTRUCTION,
    TemplateVersion.V2_TEST_REMINDER: _BASE_INSTRUCTION + " Be sure to add the [/TEST] tag.",
    TemplateVersion.V3_END_SENTINEL: (
        "Please generate the code to implement the above request and its test code in "
        "{language}. Please generate the code between [CODE] and [/CODE] and the test "
        "code between [TEST] and [/TEST]. Please generate [END] after generating [/TEST]."
    ),
    TemplateVersion.V4_TIME_FOOTER: _BASE_INSTRUCTION + " " + _TIME_FOOTER,
    TemplateVersion.V5_FINAL: _BASE_INSTRUCTION + " " + _TIME_FOOTER + " " + _NO_NATURAL_LANGUAGE,
}

# The recorded template texts spell the language name with different casing per
# version; the default language preserves each version's original spelling, any
# other language name is substituted verbatim.
_DEFAULT_LANGUAGE_CASING: dict[TemplateVersion, str] = {
    TemplateVersion.V1_TAGS: "java",
    TemplateVersion.V2_TEST_REMINDER: "java",
    TemplateVersion.V3_END_SENTINEL: "Java",
    TemplateVersion.V4_TIME_FOOTER: "java",
    TemplateVersion.V5_FINAL: "java",
}


@dataclass(frozen=True)
class PromptSpec:
    """A user request plus the template version and target language to use."""

    user_request: str
    template_version: TemplateVersion = TemplateVersion.V5_FINAL
    target_language_name: str = "Java"

    def __post_init__(self) -> None:
        if not self.user_request.strip():
            raise EmptyRequest("user_request must not be blank")


@dataclass(frozen=True)
class NonAsciiWarning:
    index: int
    character: str
    message: str


def template_text(version: TemplateVersion, language: str = "Java") -> str:
    """Return the instruction body of one template version, rendered for ``language``."""
    if language.strip().lower() == "java":
        language = _DEFAULT_LANGUAGE_CASING[version]
    return _TEMPLATE_BODIES[version].format(language=language)


def build_initial_prompt(spec: PromptSpec) -> str:
    """Assemble the first request of a run: user request, then the preset instruction."""
    if not spec.user_request.strip():
        raise EmptyRequest("user_request must not be blank")
    body = template_text(spec.template_version, spec.target_language_name)
    return f"{spec.user_request}\n\n{body}"


def build_repair_prompt(
    previous_code: str,
    previous_test: str,
    error_excerpt: str,
    protocol: TagProtocol = DEFAULT_PROTOCOL,
) -> str:
    """Assemble a regeneration request from the failing code, test code, and errors.

    The prompt embeds, in order: the prior code, the prior test code, the
    distilled error excerpt, the repair instruction, and a restatement of the
    tag protocol so the reply stays machine-extractable.
    """
    if not error_excerpt.strip():
        raise EmptyExcerpt("error_excerpt must not be blank; do not request repair on success")
    if not previous_code.strip():
        raise ValueError("previous_code must not be blank")
    restatement = (
        f"Generate the corrected code within the {protocol.code_open}...{protocol.code_close} "
        f"tag and the corrected test code within the {protocol.test_open}...{protocol.test_close} tag."
    )
    return (
        "The previously generated code and test code produced errors when compiled and tested.\n"
        "\n"
        "Previous code:\n"
        f"{protocol.code_open}\n{previous_code}\n{protocol.code_close}\n"
        "\n"
        "Previous test code:\n"
        f"{protocol.test_open}\n{previous_test}\n{protocol.test_close}\n"
        "\n"
        "Errors:\n"
        f"{error_excerpt}\n"
        "\n"
        f"Modify the code based on the errors. {restatement}"
    )


def lint_request_language(user_request: str) -> list[NonAsciiWarning]:
    """Warn (never reject) when a request contains characters outside 7-bit ASCII."""
    for index, character in enumerate(user_request):
        if ord(character) > 0x7F:
            return [
                NonAsciiWarning(
                    index=index,
                    character=character,
                    message=(
                        f"request contains non-ASCII character {character!r} at index {index}; "
                        "non-English text is usually billed at one or more tokens per character, "
                        "so an English request is cheaper"
                    ),
                )
            ]
    return []
