"""Harness: log grammar, bounded fix loop, case parsing, execution, verification."""
from __future__ import annotations

import json
import os
from pathlib import Path

import pytest

from simforge.drivers import CdpDriver, FakeDriver, parse_log_line
from simforge.errors import SchemaMismatchError, UnbalancedTagsError, UnresolvedError, VerifyLoopExceededError
from simforge.gateway import Gateway, GatewayConfig, ScriptedProvider
from simforge.harness import (
    TestCase,
    TestHarness,
    complaint_text_from_verdict,
    parse_test_cases,
)
from simforge.registry import PassSentinel, PromptRegistry

from .conftest import FIXTURES, reply

DRIVER_SCRIPT = FIXTURES / "driver_balloon.json"
BALLOON_DOC = reply("simulation_code")
BROKEN_DOC = BALLOON_DOC.replace(
    "drawScene();\n});", "drawScene();\n    brokenLaunchCall();\n});"
)


def make_harness(tmp_path, replies: dict, driver=None, goal="Adding basket weight lowers the balloon's altitude"):
    provider = ScriptedProvider(replies)
    gateway = Gateway(GatewayConfig(mode="record", cassette_path=tmp_path / "h.jsonl", provider=provider))
    driver = driver or FakeDriver.from_file(DRIVER_SCRIPT)
    harness = TestHarness(
        driver,
        PromptRegistry(),
        gateway,
        ui_graph_text=reply("ui_graph"),
        goal_title=goal,
        settle_delay_s=0,
    )
    return harness, provider


# --- log line grammar ----------------------------------------------------------


def test_log_line_accepts_canonical_form():
    line = "DEBUG [2024-05-04T12:30:01.123Z]: Balloon released"
    parsed = parse_log_line(line)
    assert parsed is not None
    assert parsed.timestamp == "2024-05-04T12:30:01.123Z"
    assert parsed.message == "Balloon released"


@pytest.mark.parametrize(
    "near_miss",
    [
        "debug [2024-05-04T12:30:01Z]: lowercase prefix",
        "DEBUG 2024-05-04T12:30:01Z]: missing open bracket",
        "DEBUG [2024-05-04T12:30:01Z: missing close bracket",
        "DEBUG [2024-05-04T12:30:01Z] missing colon",
        "DEBUG [2024-05-04T12:30:01Z]:missing space",
        "DEBUG [not a timestamp]: message",
        "DEBUG [2024-05-04]: date only",
        " DEBUG [2024-05-04T12:30:01Z]: leading space",
        "DEBUG[2024-05-04T12:30:01Z]: no gap after prefix",
        "INFO [2024-05-04T12:30:01Z]: wrong level",
    ],
)
def test_log_line_rejects_near_misses(near_miss):
    assert parse_log_line(near_miss) is None


# --- resolve_js_errors ------------------------------------------------------------


def test_clean_document_returns_after_one_probe(tmp_path):
    harness, provider = make_harness(tmp_path, {})
    doc, iterations = harness.resolve_js_errors(BALLOON_DOC)
    assert doc == BALLOON_DOC
    assert iterations == 0
    assert provider.calls == 0  # zero model calls on the clean path


def test_broken_document_converges_in_one_iteration(tmp_path):
    harness, provider = make_harness(
        tmp_path, {"js_fix": "<START>" + BALLOON_DOC + "<STOP>"}
    )
    doc, iterations = harness.resolve_js_errors(BROKEN_DOC)
    assert doc == BALLOON_DOC
    assert iterations == 1
    assert provider.calls == 1
    # post-fix probe is clean
    harness.driver.load(doc)
    assert harness.driver.console_errors() == []


def test_never_fixed_document_halts_at_exactly_three(tmp_path):
    harness, provider = make_harness(
        tmp_path, {"js_fix": "<START>" + BROKEN_DOC + "<STOP>"}
    )
    with pytest.raises(UnresolvedError) as exc:
        harness.resolve_js_errors(BROKEN_DOC)
    assert exc.value.iterations == 3
    assert provider.calls == 3
    assert "brokenLaunchCall" in exc.value.errors[0]


# --- test case parsing ---------------------------------------------------------------


def test_parse_cases_canonical_keys():
    payload = json.dumps(
        [
            {
                "uiElementId": "slider-weight",
                "actionType": "set_value",
                "actionValue": 80,
                "description": "Adjust weight",
                "expectedOutcome": "Altitude decreases",
                "isUIVerification": True,
            }
        ]
    )
    result = parse_test_cases(payload)
    assert len(result.cases) == 1
    case = result.cases[0]
    assert case.ui_element_id == "slider-weight"
    assert case.action_type == "set_value"
    assert case.action_value == 80
    assert case.is_ui_verification is True


def test_parse_cases_short_key_listing_verbatim():
    payload = (FIXTURES / "short_key_case.txt").read_text(encoding="utf-8")
    result = parse_test_cases(payload)
    assert result.rejected == []
    case = result.cases[0]
    assert case.ui_element_id == "slider-weight"
    assert case.action_type == "set_value"
    assert case.action_value == 80
    assert case.expected_outcome == "Balloon altitude decreases"
    assert case.is_ui_verification is True


def test_parse_cases_set_value_without_value_rejected():
    payload = json.dumps(
        [
            {
                "uiElementId": "a",
                "actionType": "set_value",
                "description": "d",
                "expectedOutcome": "e",
                "isUIVerification": False,
            },
            {
                "uiElementId": "b",
                "actionType": "click",
                "description": "d",
                "expectedOutcome": "e",
                "isUIVerification": False,
            },
        ]
    )
    result = parse_test_cases(payload)
    assert len(result.cases) == 1 and result.cases[0].ui_element_id == "b"
    assert result.rejected and result.rejected[0][0] == 0


def test_parse_cases_not_an_array():
    with pytest.raises(SchemaMismatchError):
        parse_test_cases('{"uiElementId": "x"}')


CASSETTE_CASES = [
    {"uiElementId": "button-release", "actionType": "click", "description": "Release the balloon", "expectedOutcome": "Balloon starts rising", "isUIVerification": False},
    {"uiElementId": "slider-weight", "actionType": "set_value", "actionValue": 80, "description": "Load the basket", "expectedOutcome": "Altitude drops", "isUIVerification": False},
    {"uiElementId": "display-altitude", "actionType": "verify_content", "description": "Check altitude readout", "expectedOutcome": "Shows altitude in meters", "isUIVerification": False},
    {"uiElementId": "toggle-grid", "actionType": "toggle", "description": "Toggle the grid", "expectedOutcome": "Grid switches", "isUIVerification": False},
    {"uiElementId": "slider-weight", "actionType": "set_value", "actionValue": 20, "description": "Lighten the basket visually", "expectedOutcome": "Balloon floats higher", "isUIVerification": True},
    {"uiElementId": "button-release", "actionType": "click", "description": "Watch the launch animation", "expectedOutcome": "Balloon animates upward", "isUIVerification": True},
]


def test_generate_test_cases_from_reply(tmp_path):
    harness, _ = make_harness(
        tmp_path,
        {"test_generation": "<START>" + json.dumps(CASSETTE_CASES) + "<STOP>"},
    )
    result = harness.generate_test_cases(BALLOON_DOC)
    assert len(result.cases) == 6
    assert result.rejected == []


# --- execution ------------------------------------------------------------------------


def test_execute_partitions_auto_and_guided(tmp_path):
    harness, _ = make_harness(tmp_path, {})
    cases = parse_test_cases(json.dumps(CASSETTE_CASES)).cases
    run = harness.execute_tests(BALLOON_DOC, cases)
    assert len(run.records) == 4
    assert len(run.guided) == 2
    assert all(not r.case.is_ui_verification for r in run.records)
    assert all(c.is_ui_verification for c in run.guided)
    assert run.initial_screenshot and run.final_screenshot
    assert all(r.pre_screenshot and r.post_screenshot for r in run.records)


def test_execute_verify_content_carries_text(tmp_path):
    harness, _ = make_harness(tmp_path, {})
    case = TestCase("display-altitude", "verify_content", None, "check", "shows meters", False)
    run = harness.execute_tests(BALLOON_DOC, [case])
    assert run.records[0].driver_result == "Altitude: 0 m"


def test_execute_missing_element_recorded_and_run_continues(tmp_path):
    harness, _ = make_harness(tmp_path, {})
    cases = [
        TestCase("ghost-control", "set_value", 5, "missing", "n/a", False),
        TestCase("button-release", "click", None, "release", "rises", False),
    ]
    run = harness.execute_tests(BALLOON_DOC, cases)
    assert len(run.records) == 2
    assert run.records[0].failure and "ghost-control" in run.records[0].failure
    assert run.records[1].failure is None
    assert any("released" in line.message.lower() for line in run.records[1].logs_delta)


def test_debug_flag_never_persisted_in_document(tmp_path):
    harness, _ = make_harness(tmp_path, {})
    case = TestCase("button-release", "click", None, "release", "rises", False)
    run = harness.execute_tests(BALLOON_DOC, [case])
    assert "window.LOG_DEBUG = false" in harness.driver.loaded_document
    assert run.records[0].logs_delta  # flag was live in the driver instance only


# --- verification -----------------------------------------------------------------------


def run_for_verify(tmp_path, verification_reply):
    harness, provider = make_harness(tmp_path, {"verification": verification_reply})
    case = TestCase("button-release", "click", None, "release", "rises", False)
    run = harness.execute_tests(BALLOON_DOC, [case])
    return harness, run


def test_verify_pass_sentinel(tmp_path):
    harness, run = run_for_verify(tmp_path, "PASS")
    outcome = harness.verify_and_repair(BALLOON_DOC, run.records, run.initial_screenshot)
    assert isinstance(outcome, PassSentinel)


def test_verify_returns_repaired_document(tmp_path):
    repaired = BALLOON_DOC.replace("const lift = 95;", "const lift = 90;")
    harness, run = run_for_verify(tmp_path, "<START>" + repaired + "<STOP>")
    outcome = harness.verify_and_repair(BALLOON_DOC, run.records, run.initial_screenshot)
    assert outcome != BALLOON_DOC
    assert "const lift = 90;" in outcome


def test_verify_unbalanced_reply_surfaces(tmp_path):
    harness, run = run_for_verify(tmp_path, "<START>half a repair")
    with pytest.raises(UnbalancedTagsError):
        harness.verify_and_repair(BALLOON_DOC, run.records, run.initial_screenshot)


# --- guided cases ------------------------------------------------------------------------


def test_run_guided_case_and_fail_verdict_complaint(tmp_path):
    harness, _ = make_harness(tmp_path, {})
    case = TestCase("slider-weight", "set_value", 20, "Lighten the basket visually", "floats higher", True)
    record = harness.run_guided_case(BALLOON_DOC, case)
    assert record.pre_screenshot and record.post_screenshot
    text = complaint_text_from_verdict(case, "balloon did not move")
    assert text == "Lighten the basket visually — balloon did not move"


def test_run_guided_case_rejects_auto_case(tmp_path):
    harness, _ = make_harness(tmp_path, {})
    case = TestCase("button-release", "click", None, "release", "rises", False)
    with pytest.raises(ValueError):
        harness.run_guided_case(BALLOON_DOC, case)


# --- full cycle --------------------------------------------------------------------------


def test_full_cycle_passes_first_time(tmp_path):
    harness, _ = make_harness(
        tmp_path,
        {
            "test_generation": "<START>" + json.dumps(CASSETTE_CASES[:4]) + "<STOP>",
            "verification": "PASS",
        },
    )
    doc, run = harness.test_and_repair(BALLOON_DOC)
    assert doc == BALLOON_DOC
    assert len(run.records) == 4


def test_full_cycle_repair_then_pass(tmp_path):
    repaired = BALLOON_DOC.replace("const lift = 95;", "const lift = 90;")
    harness, _ = make_harness(
        tmp_path,
        {
            "test_generation": "<START>" + json.dumps(CASSETTE_CASES[:4]) + "<STOP>",
            "verification": ["<START>" + repaired + "<STOP>", "PASS", "PASS"],
        },
    )
    doc, _ = harness.test_and_repair(BALLOON_DOC)
    assert "const lift = 90;" in doc


def test_full_cycle_exceeds_two_cycles(tmp_path):
    repaired = BALLOON_DOC.replace("const lift = 95;", "const lift = 90;")
    harness, _ = make_harness(
        tmp_path,
        {
            "test_generation": "<START>" + json.dumps(CASSETTE_CASES[:4]) + "<STOP>",
            "verification": [
                "<START>" + repaired + "<STOP>",
                "<START>" + BALLOON_DOC + "<STOP>",
                "<START>" + repaired + "<STOP>",
            ],
        },
    )
    with pytest.raises(VerifyLoopExceededError):
        harness.test_and_repair(BALLOON_DOC)


# --- driver contract ------------------------------------------------------------------------


def drive_contract(driver, document):
    driver.set_debug_flag(False)
    driver.load(document)
    assert driver.list_buttons() == ["button-release"]
    assert driver.read_content("slider-weight") == "50"
    assert driver.read_content("display-altitude") == "Altitude: 0 m"
    driver.click("button-release")
    assert driver.read_content("display-altitude") == "Altitude: 180 m"
    driver.set_value("slider-weight", 80)
    assert driver.read_content("slider-weight") == "80"
    assert driver.read_content("display-altitude") == "Altitude: 60 m"
    assert driver.console_errors() == []
    assert driver.debug_logs() == []  # flag off: no logs
    with pytest.raises(Exception):
        driver.click("ghost-element")
    shot = driver.screenshot()
    assert isinstance(shot, bytes) and shot

    driver.set_debug_flag(True)
    driver.load(document)
    messages = [line.message for line in driver.debug_logs()]
    assert "Simulation initialized" in messages


def test_fake_driver_contract():
    drive_contract(FakeDriver.from_file(DRIVER_SCRIPT), BALLOON_DOC)


@pytest.mark.real_driver
@pytest.mark.skipif(
    not os.environ.get("SIMFORGE_CDP_URL"),
    reason="set SIMFORGE_CDP_URL to a remote-debugging endpoint to run",
)
def test_real_driver_contract():
    driver = CdpDriver(os.environ["SIMFORGE_CDP_URL"], settle_s=0.3)
    try:
        drive_contract(driver, BALLOON_DOC)
    finally:
        driver.close()
