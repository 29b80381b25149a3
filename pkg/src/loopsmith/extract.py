"""Turn a raw assistant message into extractable code and test artifacts.

Responses arrive with their content still carrying one layer of JSON string
escaping on top of the payload parse, so extraction is a two-step affair:
``unescape_content`` applies exactly one more unescape pass, and
``extract_tagged`` pulls the code and test blocks out by marker.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .prompts import DEFAULT_PROTOCOL, TagProtocol


class ExtractionError(Exception):
    """Base class for failures while decoding or slicing a reply."""


class MalformedEscape(ExtractionError):
    """A dangling backslash or invalid escape sequence in the wire content."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class MissingTag(ExtractionError):
    """One of the four protocol markers is absent from the reply."""

    def __init__(self, marker: str):
        super().__init__(f"marker {marker} not found in reply")
        self.marker = marker


class EmptyBlock(ExtractionError):
    """A tagged block trimmed down to nothing."""

    def __init__(self, block: str):
        super().__init__(f"the {block} block is empty")
        self.block = block


class NoTypeDeclaration(ExtractionError):
    """No top-level type declaration could be found in a block."""

    def __init__(self, block: str = "source"):
        super().__init__(f"no type declaration found in the {block} block")
        self.block = block


@dataclass(frozen=True)
class ExtractedArtifacts:
    """Code and test text recovered from one reply, plus their class names."""

    code: str
    test_code: str
    code_class_name: str
    test_class_name: str
    preamble: str | None = None


_SIMPLE_ESCAPES = {
    '"': '"',
    "\\": "\\",
    "/": "/",
    "b": "\b",
    "f": "\f",
    "n": "\n",
    "r": "\r",
    "t": "\t",
}

_HEX_DIGITS = set("0123456789abcdefABCDEF")


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8", errors="surrogatepass"))


def unescape_content(wire_content: str) -> str:
    """Apply exactly one JSON-string unescape pass to already-parsed content.

    Text without escape sequences is returned unchanged. Surrogate pairs in
    consecutive ``\\uXXXX`` escapes are recombined the way a standard JSON
    string decode would; an unpaired surrogate escape becomes U+FFFD so the
    result is always encodable text (writable to files and stores).

    Raises:
        MalformedEscape: on a dangling backslash, an unknown escape letter, or
            invalid ``\\u`` hex digits, reported with the byte offset.
    """
    if "\\" not in wire_content:
        return wire_content
    out: list[str] = []
    i = 0
    n = len(wire_content)
    while i < n:
        ch = wire_content[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        if i + 1 >= n:
            raise MalformedEscape("dangling backslash", _byte_offset(wire_content, i))
        esc = wire_content[i + 1]
        if esc in _SIMPLE_ESCAPES:
            out.append(_SIMPLE_ESCAPES[esc])
            i += 2
            continue
        if esc == "u":
            hex4 = wire_content[i + 2 : i + 6]
            if len(hex4) < 4 or any(c not in _HEX_DIGITS for c in hex4):
                raise MalformedEscape("invalid \\u escape digits", _byte_offset(wire_content, i))
            code_point = int(hex4, 16)
            i += 6
            if 0xD800 <= code_point <= 0xDBFF and wire_content[i : i + 2] == "\\u":
                low_hex = wire_content[i + 2 : i + 6]
                if len(low_hex) == 4 and all(c in _HEX_DIGITS for c in low_hex):
                    low = int(low_hex, 16)
                    if 0xDC00 <= low <= 0xDFFF:
                        code_point = 0x10000 + ((code_point - 0xD800) << 10) + (low - 0xDC00)
                        i += 6
            if 0xD800 <= code_point <= 0xDFFF:
                code_point = 0xFFFD  # unpaired surrogate: keep the result encodable
            out.append(chr(code_point))
            continue
        raise MalformedEscape(f"unknown escape \\{esc}", _byte_offset(wire_content, i))
    return "".join(out)


def _trim_block(text: str) -> str:
    """Drop leading/trailing blank lines and edge markdown fences from a block."""
    lines = text.splitlines()

    def strip_blank(items: list[str]) -> list[str]:
        while items and not items[0].strip():
            items.pop(0)
        while items and not items[-1].strip():
            items.pop()
        return items

    lines = strip_blank(lines)
    if lines and lines[0].lstrip().startswith("```"):
        lines = lines[1:]
    if lines and lines[-1].strip().startswith("```"):
        lines = lines[:-1]
    return "\n".join(strip_blank(lines))


def _first_block(content: str, open_marker: str, close_marker: str) -> str:
    start = content.find(open_marker)
    if start < 0:
        raise MissingTag(open_marker)
    body_start = start + len(open_marker)
    end = content.find(close_marker, body_start)
    if end < 0:
        raise MissingTag(close_marker)
    return content[body_start:end]


def extract_tagged(content: str, protocol: TagProtocol = DEFAULT_PROTOCOL) -> ExtractedArtifacts:
    """Extract the first code block and first test block from unescaped content.

    The code block is the text strictly between the first ``code_open`` and the
    first subsequent ``code_close``; the test block works the same way with the
    test markers. Any non-whitespace text before the first marker is kept as
    the preamble, and anything after the test block (an ``[END]`` sentinel, a
    sign-off) is ignored.
    """
    code = _trim_block(_first_block(content, protocol.code_open, protocol.code_close))
    if not code:
        raise EmptyBlock("code")
    test_code = _trim_block(_first_block(content, protocol.test_open, protocol.test_close))
    if not test_code:
        raise EmptyBlock("test")

    first_marker = min(
        (pos for pos in (content.find(m) for m in protocol.markers) if pos >= 0),
        default=0,
    )
    before = content[:first_marker].strip()
    preamble = before if before else None

    try:
        code_class = extract_class_name(code)
    except NoTypeDeclaration:
        raise NoTypeDeclaration("code") from None
    try:
        test_class = extract_class_name(test_code)
    except NoTypeDeclaration:
        raise NoTypeDeclaration("test") from None

    return ExtractedArtifacts(
        code=code,
        test_code=test_code,
        code_class_name=code_class,
        test_class_name=test_class,
        preamble=preamble,
    )


def _blank_out_comments_and_strings(source: str) -> str:
    """Replace comments and string/char literals with spaces, preserving indices."""
    out = list(source)
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "/" and i + 1 < n and source[i + 1] == "/":
            j = i
            while j < n and source[j] != "\n":
                out[j] = " "
                j += 1
            i = j
        elif ch == "/" and i + 1 < n and source[i + 1] == "*":
            j = i + 2
            while j < n and not (source[j] == "*" and j + 1 < n and source[j + 1] == "/"):
                j += 1
            end = min(n, j + 2)
            for k in range(i, end):
                if out[k] != "\n":
                    out[k] = " "
            i = end
        elif ch in ('"', "'"):
            quote = ch
            j = i + 1
            while j < n and source[j] != quote:
                if source[j] == "\\":
                    j += 1
                j += 1
            end = min(n, j + 1)
            for k in range(i, end):
                if out[k] != "\n":
                    out[k] = " "
            i = end
        else:
            i += 1
    return "".join(out)


_DECLARATION = re.compile(
    r"(?P<mods>(?:\b(?:public|protected|private|abstract|final|static|strictfp|sealed)\s+)*)"
    r"\b(?:class|interface|enum|record)\s+(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
)


def extract_class_name(source: str) -> str:
    """Return the name of the first top-level type declaration in ``source``.

    A declaration marked ``public`` wins over earlier non-public ones.
    Declarations inside comments and string literals are ignored; nested types
    are not considered (scanner-grade, not a parser).
    """
    if not source.strip():
        raise NoTypeDeclaration()
    sanitized = _blank_out_comments_and_strings(source)
    candidates: list[tuple[int, bool, str]] = []
    for match in _DECLARATION.finditer(sanitized):
        depth = sanitized.count("{", 0, match.start()) - sanitized.count("}", 0, match.start())
        if depth != 0:
            continue
        is_public = "public" in match.group("mods").split()
        candidates.append((match.start(), is_public, match.group("name")))
    if not candidates:
        raise NoTypeDeclaration()
    for _, is_public, name in candidates:
        if is_public:
            return name
    return candidates[0][2]
