"""Structured errors shared across the package.

Every error carries the fields a caller needs to react programmatically;
message text is derived from them. Catching :class:`SimforgeError` catches
everything raised by this package on purpose.
"""
from __future__ import annotations


class SimforgeError(Exception):
    """Base class for all package errors."""


# --- graph format ---------------------------------------------------------


class GraphSyntaxError(SimforgeError):
    """A line of graph text matched neither the node nor the edge form."""

    def __init__(self, line_number: int, fragment: str, reason: str = ""):
        self.line_number = line_number
        self.fragment = fragment
        self.reason = reason
        detail = f": {reason}" if reason else ""
        super().__init__(f"line {line_number}: {fragment!r}{detail}")


class DanglingEdgeError(SimforgeError):
    """An edge references node ids that were never declared."""

    def __init__(self, missing_ids: tuple[str, ...]):
        self.missing_ids = missing_ids
        super().__init__(f"edges reference undeclared node ids: {', '.join(missing_ids)}")


class UnknownNodeError(SimforgeError):
    def __init__(self, node_id: str):
        self.node_id = node_id
        super().__init__(f"unknown node id: {node_id}")


class UnknownLinkError(SimforgeError):
    def __init__(self, source: str, target: str, label: str):
        self.source = source
        self.target = target
        self.label = label
        super().__init__(f"unknown link: {source} -->|{label}| {target}")


class DuplicateLinkError(SimforgeError):
    def __init__(self, source: str, target: str, label: str):
        self.source = source
        self.target = target
        self.label = label
        super().__init__(f"duplicate link: {source} -->|{label}| {target}")


# --- prompt registry ------------------------------------------------------


class MissingVarError(SimforgeError):
    def __init__(self, template_id: str, names: tuple[str, ...]):
        self.template_id = template_id
        self.names = names
        super().__init__(f"template {template_id}: missing vars {', '.join(names)}")


class UnknownVarError(SimforgeError):
    def __init__(self, template_id: str, names: tuple[str, ...]):
        self.template_id = template_id
        self.names = names
        super().__init__(f"template {template_id}: unknown vars {', '.join(names)}")


class NoGraphFoundError(SimforgeError):
    def __init__(self) -> None:
        super().__init__("no graph header line found in response")


class MalformedOptionError(SimforgeError):
    def __init__(self, index: int, fragment: str):
        self.index = index
        self.fragment = fragment
        super().__init__(f"option {index} malformed: {fragment!r}")


class EmptyListError(SimforgeError):
    def __init__(self) -> None:
        super().__init__("zero options parsed from response")


class UnbalancedTagsError(SimforgeError):
    def __init__(self, present: str):
        self.present = present
        super().__init__(f"found {present} without its counterpart")


class NoPayloadError(SimforgeError):
    def __init__(self) -> None:
        super().__init__("response carries neither tagged payload nor PASS")


class SchemaMismatchError(SimforgeError):
    def __init__(self, missing: tuple[str, ...] = (), extra: tuple[str, ...] = (), reason: str = ""):
        self.missing = missing
        self.extra = extra
        self.reason = reason
        parts = []
        if missing:
            parts.append(f"missing fields: {', '.join(missing)}")
        if extra:
            parts.append(f"extra fields: {', '.join(extra)}")
        if reason:
            parts.append(reason)
        super().__init__("; ".join(parts) or "schema mismatch")


class BadTypeCodeError(SimforgeError):
    def __init__(self, value: object):
        self.value = value
        super().__init__(f"type code outside 1-8: {value!r}")


# --- gateway --------------------------------------------------------------


class ProviderError(SimforgeError):
    def __init__(self, status: int, body_excerpt: str):
        self.status = status
        self.body_excerpt = body_excerpt
        super().__init__(f"provider returned {status}: {body_excerpt[:200]}")


class GatewayTimeoutError(SimforgeError):
    def __init__(self, seconds: float):
        self.seconds = seconds
        super().__init__(f"provider call timed out after {seconds:.0f}s")


class ReplayMissError(SimforgeError):
    def __init__(self, fingerprint: str, tag: str, nearest_tags: tuple[str, ...] = ()):
        self.fingerprint = fingerprint
        self.tag = tag
        self.nearest_tags = nearest_tags
        hint = f" (cassette has tags: {', '.join(nearest_tags)})" if nearest_tags else ""
        super().__init__(f"no cassette entry for fingerprint {fingerprint[:12]}… tag={tag}{hint}")


# --- session state machine ------------------------------------------------


class StageOrderViolationError(SimforgeError):
    def __init__(self, stage: str, reason: str):
        self.stage = stage
        self.reason = reason
        super().__init__(f"stage {stage}: {reason}")


class NotADraftError(SimforgeError):
    def __init__(self, stage: str, status: str):
        self.stage = stage
        self.status = status
        super().__init__(f"stage {stage} is {status}, not a draft")


class IdDriftError(SimforgeError):
    def __init__(self, expected: tuple[str, ...], got: tuple[str, ...]):
        self.expected = expected
        self.got = got
        super().__init__(
            f"node id set drifted and realignment is ambiguous; expected {sorted(expected)}, got {sorted(got)}"
        )


class EmptyGoalGraphError(SimforgeError):
    def __init__(self) -> None:
        super().__init__("model removed every node while pruning to the learning goal")


class MissingInstrumentationError(SimforgeError):
    def __init__(self, markers: tuple[str, ...]):
        self.markers = markers
        super().__init__(f"document lacks required markers: {', '.join(markers)}")


# --- resolution engine ----------------------------------------------------


class UnknownReferentError(SimforgeError):
    def __init__(self, reasons: tuple[str, ...]):
        self.reasons = reasons
        super().__init__("; ".join(reasons))


class NoSvgFoundError(SimforgeError):
    def __init__(self) -> None:
        super().__init__("reply does not contain a single balanced <svg> element")


class InvalidBoxError(SimforgeError):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


class EmptySelectionError(SimforgeError):
    def __init__(self) -> None:
        super().__init__("no elements of the reply belong to the current UI graph")


# --- test harness ---------------------------------------------------------


class UnresolvedError(SimforgeError):
    """Script errors persisted through the bounded fix loop."""

    def __init__(self, errors: tuple[str, ...], iterations: int):
        self.errors = errors
        self.iterations = iterations
        super().__init__(f"{len(errors)} script error(s) remain after {iterations} fix attempts")


class ElementNotFoundError(SimforgeError):
    def __init__(self, element_id: str):
        self.element_id = element_id
        super().__init__(f"no element with id {element_id!r}")


class DriverCrashError(SimforgeError):
    def __init__(self, reason: str, partial_records: tuple = ()):
        self.reason = reason
        self.partial_records = partial_records
        super().__init__(f"driver crashed: {reason}")


class VerifyLoopExceededError(SimforgeError):
    def __init__(self, cycles: int):
        self.cycles = cycles
        super().__init__(f"verification still requests repairs after {cycles} full cycles")
