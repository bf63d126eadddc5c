"""Versioned prompt templates and structured extraction of model replies.

Template bodies ship as individual text assets next to this module; the
manifest pins each body to a checksum so any edit fails the suite. Bodies
keep their documented source form byte-for-byte, including backslash-escaped
``\\${...}`` sequences inside embedded script snippets; only unescaped
``${name}`` markers are substitution points.
"""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from typing import Mapping, Optional, Union

from .errors import (
    BadTypeCodeError,
    EmptyListError,
    MalformedOptionError,
    MissingVarError,
    NoGraphFoundError,
    NoPayloadError,
    SchemaMismatchError,
    UnbalancedTagsError,
    UnknownVarError,
)

_MARKER_RE = re.compile(r"(?<!\\)\$\{([^}]*)\}")

# Raw brace contents that map onto a clean variable name.
_MARKER_ALIASES = {
    ".join('; ')": "jsErrors",
    "errorMessages.join('; ')": "errorMessages",
    "JSON.stringify(newAssumptions)": "newAssumptions",
}

# Directive blocks expanded by the renderer itself, never by callers.
BUILTIN_VARS = {"mermaidDirections": "mermaid_directions", "roughDirections": "rough_directions"}

PASS_SENTINEL = "PASS"


class PassSentinel:
    """Marker result: verification found nothing to change."""

    def __repr__(self) -> str:  # pragma: no cover
        return "PassSentinel"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PassSentinel)

    def __hash__(self) -> int:
        return hash("PassSentinel")


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    body: str
    required_vars: tuple[str, ...]
    expects_images: bool
    sha256: str


class PromptRegistry:
    """Read-only registry of prompt templates, loaded once from package data."""

    def __init__(self) -> None:
        root = resources.files("simforge") / "templates"
        manifest = json.loads((root / "manifest.json").read_text(encoding="utf-8"))
        self._templates: dict[str, PromptTemplate] = {}
        for tid, meta in manifest.items():
            body = (root / f"{tid}.txt").read_text(encoding="utf-8")
            self._templates[tid] = PromptTemplate(
                id=tid,
                body=body,
                required_vars=tuple(meta["required_vars"]),
                expects_images=bool(meta["expects_images"]),
                sha256=meta["sha256"],
            )

    def ids(self) -> tuple[str, ...]:
        return tuple(sorted(self._templates))

    def get(self, template_id: str) -> PromptTemplate:
        if template_id not in self._templates:
            raise KeyError(f"unknown template id: {template_id}")
        return self._templates[template_id]

    def checksum_ok(self, template_id: str) -> bool:
        t = self.get(template_id)
        return hashlib.sha256(t.body.encode("utf-8")).hexdigest() == t.sha256

    def render(self, template_id: str, vars: Mapping[str, str]) -> str:
        """Substitute placeholders; the variable set must match exactly."""
        t = self.get(template_id)
        required = set(t.required_vars)
        provided = set(vars)
        missing = tuple(sorted(required - provided))
        if missing:
            raise MissingVarError(template_id, missing)
        extra = tuple(sorted(provided - required))
        if extra:
            raise UnknownVarError(template_id, extra)

        values = dict(vars)
        for builtin, source_id in BUILTIN_VARS.items():
            values[builtin] = self._templates[source_id].body

        def substitute(m: re.Match) -> str:
            name = _MARKER_ALIASES.get(m.group(1), m.group(1))
            if name not in values:
                raise UnknownVarError(template_id, (name,))
            return values[name]

        return _MARKER_RE.sub(substitute, t.body)


_default_registry: PromptRegistry | None = None


def default_registry() -> PromptRegistry:
    global _default_registry
    if _default_registry is None:
        _default_registry = PromptRegistry()
    return _default_registry


# --- graph block extraction -------------------------------------------------

_HEADER_RE = re.compile(r"^\s*graph (LR|TD)\s*$")
_BODY_LINE_RE = re.compile(
    r"^\s*(?:[^\s\[\]|]+\[.+\]|[^\s\[\]|]+\s*-->\s*\|[^|]+\|\s*[^\s\[\]|]+)\s*$"
)
_FENCE_LINE_RE = re.compile(r"^\s*```")


def extract_graph(response: str) -> str:
    """Slice the graph block out of a model reply.

    The block runs from the first ``graph LR`` / ``graph TD`` line through the
    last consecutive node/edge line; fence lines are dropped first.
    """
    lines = [ln for ln in response.split("\n") if not _FENCE_LINE_RE.match(ln)]
    start = next((i for i, ln in enumerate(lines) if _HEADER_RE.match(ln)), None)
    if start is None:
        raise NoGraphFoundError()
    end = start
    for i in range(start + 1, len(lines)):
        if not lines[i].strip():
            continue
        if _BODY_LINE_RE.match(lines[i]):
            end = i
        else:
            break
    return "\n".join(lines[start : end + 1])


# --- option list parsing ------------------------------------------------------


class OptionKind(Enum):
    SCENARIO = "scenario"
    GOAL = "goal"


class GoalCategory(Enum):
    DESCRIPTIVE = "descriptive"
    EXPLANATORY = "explanatory"
    PROCEDURAL = "procedural"


_CATEGORY_BY_DIGIT = {
    "1": GoalCategory.DESCRIPTIVE,
    "2": GoalCategory.EXPLANATORY,
    "3": GoalCategory.PROCEDURAL,
}

_TITLE_RE = re.compile(r"\{\{(.+?)\}\}", re.DOTALL)
_GOAL_DIGIT_RE = re.compile(r"^([123])\.\s*")


@dataclass(frozen=True)
class OptionItem:
    title: str
    description: str
    goal_category: Optional[GoalCategory] = None


def parse_options(response: str, kind: OptionKind) -> list[OptionItem]:
    """Split a ``|``-separated option list; titles live in double curly braces.

    Goal options must open their description with a ``1.`` / ``2.`` / ``3.``
    knowledge-kind digit, which is mapped to a category and stripped.
    """
    fragments = [f for f in response.split("|")]
    items: list[OptionItem] = []
    index = 0
    for fragment in fragments:
        if not fragment.strip():
            continue
        m = _TITLE_RE.search(fragment)
        if not m:
            raise MalformedOptionError(index, fragment.strip())
        title = m.group(1).strip()
        if not title:
            raise MalformedOptionError(index, fragment.strip())
        description = (fragment[: m.start()] + fragment[m.end() :]).strip()
        category = None
        if kind is OptionKind.GOAL:
            dm = _GOAL_DIGIT_RE.match(description)
            if not dm:
                raise MalformedOptionError(index, fragment.strip())
            category = _CATEGORY_BY_DIGIT[dm.group(1)]
            description = description[dm.end() :].strip()
        items.append(OptionItem(title, description, category))
        index += 1
    if not items:
        raise EmptyListError()
    return items


# --- tagged payload extraction -------------------------------------------------

START_TAG = "<START>"
STOP_TAG = "<STOP>"


def extract_between_tags(response: str) -> str:
    """Text strictly between the first <START> and the next <STOP>."""
    start = response.find(START_TAG)
    stop = response.find(STOP_TAG, start + len(START_TAG) if start >= 0 else 0)
    if start < 0 and stop < 0:
        raise NoPayloadError()
    if start < 0 or stop < 0:
        raise UnbalancedTagsError(START_TAG if start >= 0 else STOP_TAG)
    return response[start + len(START_TAG) : stop]


def extract_tagged_html(response: str) -> Union[str, PassSentinel]:
    """The tagged document, or the PASS sentinel when nothing needs changing."""
    if response.strip() == PASS_SENTINEL:
        return PassSentinel()
    return extract_between_tags(response)


def extract_document(response: str) -> str:
    """A whole-reply HTML document, shorn of fences and padding."""
    return _strip_fences_text(response).strip()


def _strip_fences_text(text: str) -> str:
    lines = text.split("\n")
    content = [i for i, ln in enumerate(lines) if ln.strip()]
    if len(content) >= 2:
        first, last = content[0], content[-1]
        if _FENCE_LINE_RE.match(lines[first]) and _FENCE_LINE_RE.match(lines[last]):
            return "\n".join(lines[first + 1 : last])
    return text


# --- widget suggestion parsing ---------------------------------------------------


@dataclass(frozen=True)
class AddNodePayload:
    label: str


@dataclass(frozen=True)
class AddEdgePayload:
    source: str
    target: str
    label: str


@dataclass(frozen=True)
class EditAssumptionsPayload:
    node: str
    assumptions: tuple[str, ...]


@dataclass(frozen=True)
class RedrawPayload:
    box: tuple[float, float, float, float]
    svg: str


@dataclass(frozen=True)
class EditNodePayload:
    node: str
    old_label: str
    new_label: str


@dataclass(frozen=True)
class EditEdgePayload:
    source: str
    target: str
    old_label: str
    new_label: str


@dataclass(frozen=True)
class RemoveNodePayload:
    node: str


@dataclass(frozen=True)
class RemoveEdgePayload:
    source: str
    target: str
    label: str


SuggestionPayload = Union[
    AddNodePayload,
    AddEdgePayload,
    EditAssumptionsPayload,
    RedrawPayload,
    EditNodePayload,
    EditEdgePayload,
    RemoveNodePayload,
    RemoveEdgePayload,
]

# type code -> (payload fields in wire order, payload class)
SUGGESTION_SCHEMAS: dict[int, tuple[tuple[str, ...], type]] = {
    1: (("label",), AddNodePayload),
    2: (("source", "target", "label"), AddEdgePayload),
    3: (("node", "assumptions"), EditAssumptionsPayload),
    4: (("box", "svg"), RedrawPayload),
    5: (("node", "oldLabel", "newLabel"), EditNodePayload),
    6: (("source", "target", "oldLabel", "newLabel"), EditEdgePayload),
    7: (("node",), RemoveNodePayload),
    8: (("source", "target", "label"), RemoveEdgePayload),
}

_WIRE_TO_FIELD = {"oldLabel": "old_label", "newLabel": "new_label"}


@dataclass(frozen=True)
class WidgetSuggestion:
    type_code: int
    message: str
    payload: SuggestionPayload

    def to_wire(self) -> dict:
        d: dict = {"type": self.type_code, "message": self.message}
        fields, _ = SUGGESTION_SCHEMAS[self.type_code]
        for wire_name in fields:
            value = getattr(self.payload, _WIRE_TO_FIELD.get(wire_name, wire_name))
            if isinstance(value, tuple):
                value = list(value)
            d[wire_name] = value
        return d


_UNQUOTED_KEY_RE = re.compile(r"([{,]\s*)([A-Za-z_][A-Za-z0-9_]*)(\s*:)")
_LINE_COMMENT_RE = re.compile(r"^\s*//.*$", re.MULTILINE)


def parse_tolerant_json(response: str):
    """Parse a JSON value out of a model reply, forgiving common looseness.

    Tolerates surrounding prose and fences, ``//`` line comments, and
    unquoted object keys. Raises :class:`SchemaMismatchError` when nothing
    parseable is found.
    """
    candidates = []
    text = _strip_fences_text(response).strip()
    candidates.append(text)
    sliced = _slice_balanced(text)
    if sliced is not None:
        candidates.append(sliced)
    for candidate in candidates:
        for variant in (candidate, _repair_json(candidate)):
            try:
                return json.loads(variant)
            except (json.JSONDecodeError, ValueError):
                continue
    raise SchemaMismatchError(reason="reply is not a JSON value")


def _repair_json(text: str) -> str:
    text = _LINE_COMMENT_RE.sub("", text)
    text = _UNQUOTED_KEY_RE.sub(r'\1"\2"\3', text)
    return text


def _slice_balanced(text: str):
    """The first balanced {...} or [...] region, ignoring brackets in strings."""
    for opener, closer in (("{", "}"), ("[", "]")):
        start = text.find(opener)
        if start < 0:
            continue
        depth = 0
        in_string = False
        escaped = False
        for i in range(start, len(text)):
            c = text[i]
            if in_string:
                if escaped:
                    escaped = False
                elif c == "\\":
                    escaped = True
                elif c == '"':
                    in_string = False
                continue
            if c == '"':
                in_string = True
            elif c == opener:
                depth += 1
            elif c == closer:
                depth -= 1
                if depth == 0:
                    return text[start : i + 1]
        return None
    return None


def parse_widget_json(response: str) -> WidgetSuggestion:
    """Parse one of the eight typed fix objects out of a model reply."""
    data = parse_tolerant_json(response)
    if not isinstance(data, dict):
        raise SchemaMismatchError(reason="reply is not a JSON object")
    if "type" not in data:
        raise SchemaMismatchError(missing=("type",))
    raw_code = data["type"]
    if isinstance(raw_code, bool) or not isinstance(raw_code, (int, float)) or int(raw_code) != raw_code:
        raise BadTypeCodeError(raw_code)
    code = int(raw_code)
    if code not in SUGGESTION_SCHEMAS:
        raise BadTypeCodeError(code)

    fields, payload_cls = SUGGESTION_SCHEMAS[code]
    expected = {"type", "message", *fields}
    missing = tuple(sorted(expected - set(data)))
    extra = tuple(sorted(set(data) - expected))
    if missing or extra:
        raise SchemaMismatchError(missing=missing, extra=extra)

    message = data["message"]
    if not isinstance(message, str) or not message.strip():
        raise SchemaMismatchError(reason="message must be non-empty text")

    kwargs = {}
    for wire_name in fields:
        value = data[wire_name]
        field_name = _WIRE_TO_FIELD.get(wire_name, wire_name)
        if wire_name == "assumptions":
            if not isinstance(value, list) or not value or not all(isinstance(v, str) and v.strip() for v in value):
                raise SchemaMismatchError(reason="assumptions must be a non-empty list of text")
            value = tuple(value)
        elif wire_name == "box":
            if (
                not isinstance(value, list)
                or len(value) != 4
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
            ):
                raise SchemaMismatchError(reason="box must be [start_x, start_y, width, height]")
            if value[2] <= 0 or value[3] <= 0:
                raise SchemaMismatchError(reason="box width and height must be positive")
            value = tuple(float(v) for v in value)
        else:
            if not isinstance(value, str) or not value.strip():
                raise SchemaMismatchError(reason=f"{wire_name} must be non-empty text")
        kwargs[field_name] = value

    return WidgetSuggestion(code, message, payload_cls(**kwargs))
