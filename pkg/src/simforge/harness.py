"""Automated simulation testing: fix script errors, run structured cases,
and ask the model to verify outcomes or repair the document.

All loops are bounded: at most three script-fix attempts, and at most two
full resolve/generate/execute/verify cycles, so the harness always
terminates regardless of what the model replies.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Union

from .document import missing_markers
from .drivers import BrowserDriver, LogLine
from .errors import (
    DriverCrashError,
    ElementNotFoundError,
    SchemaMismatchError,
    UnresolvedError,
    VerifyLoopExceededError,
)
from .gateway import Gateway, ImageAttachment, text_request
from .registry import (
    PassSentinel,
    PromptRegistry,
    extract_between_tags,
    extract_tagged_html,
    parse_tolerant_json,
)

MAX_FIX_ITERATIONS = 3
MAX_VERIFY_CYCLES = 2
DEFAULT_SETTLE_S = 0.3

ACTION_TYPES = ("click", "set_value", "toggle", "verify_content")

_KEY_ALIASES = {
    "uiElementId": ("uiElementId", "ID"),
    "actionType": ("actionType", "action"),
    "actionValue": ("actionValue", "value"),
    "description": ("description",),
    "expectedOutcome": ("expectedOutcome",),
    "isUIVerification": ("isUIVerification",),
}


@dataclass(frozen=True)
class TestCase:
    __test__ = False  # not a pytest class

    ui_element_id: str
    action_type: str
    action_value: Optional[Union[str, int, float, bool]]
    description: str
    expected_outcome: str
    is_ui_verification: bool

    def to_wire(self) -> dict:
        wire = {
            "uiElementId": self.ui_element_id,
            "actionType": self.action_type,
            "description": self.description,
            "expectedOutcome": self.expected_outcome,
            "isUIVerification": self.is_ui_verification,
        }
        if self.action_value is not None:
            wire["actionValue"] = self.action_value
        return wire


@dataclass
class TestRunRecord:
    __test__ = False  # not a pytest class

    case: TestCase
    pre_screenshot: bytes
    post_screenshot: bytes
    logs_delta: list[LogLine] = field(default_factory=list)
    errors_delta: list[str] = field(default_factory=list)
    driver_result: Optional[str] = None
    failure: Optional[str] = None


@dataclass
class RunResult:
    records: list[TestRunRecord]
    guided: list[TestCase]
    initial_screenshot: bytes = b""
    final_screenshot: bytes = b""


@dataclass
class CaseParseResult:
    cases: list[TestCase]
    rejected: list[tuple[int, str]] = field(default_factory=list)


def parse_test_cases(payload: str) -> CaseParseResult:
    """Normalize a JSON array of test cases, accepting both key spellings.

    Elements that fail validation are collected per index and the rest kept.
    """
    data = parse_tolerant_json(payload)
    if not isinstance(data, list):
        raise SchemaMismatchError(reason="test cases payload is not a JSON array")
    result = CaseParseResult([])
    for index, element in enumerate(data):
        try:
            result.cases.append(_normalize_case(element))
        except SchemaMismatchError as exc:
            result.rejected.append((index, str(exc)))
    return result


def _normalize_case(element) -> TestCase:
    if not isinstance(element, dict):
        raise SchemaMismatchError(reason="test case is not a JSON object")
    values: dict = {}
    for canonical, aliases in _KEY_ALIASES.items():
        present = [k for k in aliases if k in element]
        if present:
            values[canonical] = element[present[0]]
    known_keys = {k for aliases in _KEY_ALIASES.values() for k in aliases}
    extra = tuple(sorted(set(element) - known_keys))
    missing = tuple(
        sorted(
            canonical
            for canonical in ("uiElementId", "actionType", "description", "expectedOutcome", "isUIVerification")
            if canonical not in values
        )
    )
    if missing or extra:
        raise SchemaMismatchError(missing=missing, extra=extra)
    action_type = values["actionType"]
    if action_type not in ACTION_TYPES:
        raise SchemaMismatchError(reason=f"unknown actionType {action_type!r}")
    has_value = "actionValue" in values and values["actionValue"] is not None
    if action_type == "set_value" and not has_value:
        raise SchemaMismatchError(missing=("actionValue",))
    if action_type != "set_value" and has_value:
        raise SchemaMismatchError(extra=("actionValue",), reason="actionValue is only valid for set_value")
    if not isinstance(values["isUIVerification"], bool):
        raise SchemaMismatchError(reason="isUIVerification must be a boolean")
    return TestCase(
        ui_element_id=str(values["uiElementId"]),
        action_type=action_type,
        action_value=values.get("actionValue"),
        description=str(values["description"]),
        expected_outcome=str(values["expectedOutcome"]),
        is_ui_verification=values["isUIVerification"],
    )


class TestHarness:
    __test__ = False  # not a pytest class

    def __init__(
        self,
        driver: BrowserDriver,
        registry: PromptRegistry,
        gateway: Gateway,
        ui_graph_text: str,
        goal_title: str,
        settle_delay_s: float = DEFAULT_SETTLE_S,
    ):
        self.driver = driver
        self.registry = registry
        self.gateway = gateway
        self.ui_graph_text = ui_graph_text
        self.goal_title = goal_title
        self.settle_delay_s = settle_delay_s
        self.run_log: list[dict] = []

    def _note(self, name: str, **payload) -> None:
        self.run_log.append({"event": name, **payload})

    # -- script error loop ----------------------------------------------------

    def resolve_js_errors(self, document: str) -> tuple[str, int]:
        """Probe-and-fix loop; returns (clean document, fix iterations used)."""
        fixes = 0
        current = document
        while True:
            errors = self._probe(current)
            if not errors:
                self._note("js_probe_clean", iterations=fixes)
                return current, fixes
            if fixes >= MAX_FIX_ITERATIONS:
                self._note("js_fix_exhausted", iterations=fixes, errors=errors)
                raise UnresolvedError(tuple(errors), fixes)
            fixes += 1
            self._note("js_fix_iteration", iteration=fixes, errors=errors)
            prompt = self.registry.render(
                "js_fix",
                {
                    "htmlCode": current,
                    "UIMap": self.ui_graph_text,
                    "errorMessages": "; ".join(errors),
                },
            )
            reply = self.gateway.complete(text_request("js_fix", prompt))
            current = extract_between_tags(reply)

    def _probe(self, document: str) -> list[str]:
        self.driver.load(document)
        for button_id in self.driver.list_buttons():
            try:
                self.driver.click(button_id)
            except ElementNotFoundError:
                continue
        return self.driver.console_errors()

    # -- case generation -----------------------------------------------------------

    def generate_test_cases(self, document: str) -> CaseParseResult:
        prompt = self.registry.render(
            "test_generation",
            {
                "htmlCode": document,
                "selectedHypothesis": self.goal_title,
                "UIMap": self.ui_graph_text,
            },
        )
        reply = self.gateway.complete(text_request("test_generation", prompt))
        payload = extract_between_tags(reply)
        result = parse_test_cases(payload)
        self._note("cases_generated", kept=len(result.cases), rejected=len(result.rejected))
        return result

    # -- execution --------------------------------------------------------------------

    def execute_tests(self, document: str, cases: list[TestCase]) -> RunResult:
        auto = [c for c in cases if not c.is_ui_verification]
        guided = [c for c in cases if c.is_ui_verification]
        result = RunResult([], guided)

        self.driver.set_debug_flag(True)
        try:
            self.driver.load(document)
            result.initial_screenshot = self.driver.screenshot()
            for case in auto:
                result.records.append(self._run_case(case))
            result.final_screenshot = self.driver.screenshot()
        except DriverCrashError as exc:
            raise DriverCrashError(exc.reason, tuple(result.records)) from exc
        finally:
            self.driver.set_debug_flag(False)
        self._note("tests_executed", auto=len(result.records), guided=len(guided))
        return result

    def _run_case(self, case: TestCase) -> TestRunRecord:
        logs_before = len(self.driver.debug_logs())
        errors_before = len(self.driver.console_errors())
        pre = self.driver.screenshot()
        failure = None
        driver_result = None
        try:
            if case.action_type == "click":
                self.driver.click(case.ui_element_id)
            elif case.action_type == "set_value":
                self.driver.set_value(case.ui_element_id, case.action_value)
            elif case.action_type == "toggle":
                self.driver.toggle(case.ui_element_id)
            elif case.action_type == "verify_content":
                driver_result = self.driver.read_content(case.ui_element_id)
        except ElementNotFoundError as exc:
            failure = str(exc)
        if self.settle_delay_s:
            time.sleep(self.settle_delay_s)
        post = self.driver.screenshot()
        return TestRunRecord(
            case=case,
            pre_screenshot=pre,
            post_screenshot=post,
            logs_delta=self.driver.debug_logs()[logs_before:],
            errors_delta=self.driver.console_errors()[errors_before:],
            driver_result=driver_result,
            failure=failure,
        )

    def run_guided_case(self, document: str, case: TestCase) -> TestRunRecord:
        if not case.is_ui_verification:
            raise ValueError("guided execution is only for UI-verification cases")
        self.driver.set_debug_flag(True)
        try:
            self.driver.load(document)
            record = self._run_case(case)
        finally:
            self.driver.set_debug_flag(False)
        self._note("guided_case_played", element=case.ui_element_id)
        return record

    # -- verification --------------------------------------------------------------------

    def verify_and_repair(self, document: str, records: list[TestRunRecord], initial_screenshot: bytes = b"") -> Union[PassSentinel, str]:
        if not records:
            raise ValueError("verification needs at least one executed record")
        js_errors = sorted({e for r in records for e in r.errors_delta})
        log_lines = []
        for i, r in enumerate(records):
            for line in r.logs_delta:
                log_lines.append(f"[case {i}] DEBUG [{line.timestamp}]: {line.message}")
        debug_logs_text = "Debug logs:\n" + ("\n".join(log_lines) if log_lines else "(none)")
        prompt = self.registry.render(
            "verification",
            {
                "htmlCode": document,
                "UIMap": self.ui_graph_text,
                "selectedHypothesis": self.goal_title,
                "jsErrors": "; ".join(js_errors),
                "debugLogsText": debug_logs_text,
                "initialScreenshotNote": "Initial screenshot attached." if initial_screenshot else "",
            },
        )
        results_context = "Test case results:\n" + "\n".join(
            _describe_record(i, r) for i, r in enumerate(records)
        )
        images = []
        if initial_screenshot:
            images.append(ImageAttachment("image/png", initial_screenshot))
        images.extend(ImageAttachment("image/png", r.post_screenshot) for r in records if r.post_screenshot)
        reply = self.gateway.complete(
            text_request("verification", prompt, context=(results_context,), images=tuple(images))
        )
        outcome = extract_tagged_html(reply)
        self._note("verified", outcome="pass" if isinstance(outcome, PassSentinel) else "repaired")
        return outcome

    # -- full cycle ---------------------------------------------------------------------------

    def test_and_repair(self, document: str) -> tuple[str, RunResult]:
        """Up to two full resolve/generate/execute/verify cycles."""
        current = document
        last_run: Optional[RunResult] = None
        for cycle in range(1, MAX_VERIFY_CYCLES + 1):
            current, _ = self.resolve_js_errors(current)
            cases = self.generate_test_cases(current).cases
            run = self.execute_tests(current, cases)
            last_run = run
            if not run.records:
                return current, run
            outcome = self.verify_and_repair(current, run.records, run.initial_screenshot)
            if isinstance(outcome, PassSentinel):
                return current, run
            repaired = outcome
            if missing_markers(repaired):
                self._note("repair_missing_markers", markers=missing_markers(repaired))
            current = repaired
        raise VerifyLoopExceededError(MAX_VERIFY_CYCLES)


def _describe_record(index: int, record: TestRunRecord) -> str:
    case = record.case
    parts = [
        f"{index}. element={case.ui_element_id} action={case.action_type}",
        f"value={case.action_value}" if case.action_value is not None else "",
        f"expected={case.expected_outcome!r}",
    ]
    if record.driver_result is not None:
        parts.append(f"content={record.driver_result!r}")
    if record.failure:
        parts.append(f"FAILED: {record.failure}")
    if record.errors_delta:
        parts.append(f"errors={record.errors_delta}")
    return " ".join(p for p in parts if p)


def complaint_text_from_verdict(case: TestCase, note: str = "") -> str:
    """Chat complaint text for a failed guided case."""
    text = case.description
    if note:
        text = f"{text} — {note}"
    return text
