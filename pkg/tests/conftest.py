"""Shared fixtures: canned replies, cassette recording, walkthrough driver."""
from __future__ import annotations

from pathlib import Path

import pytest

from simforge.gateway import Gateway, GatewayConfig, ScriptedProvider
from simforge.pipeline import Pipeline
from simforge.registry import GoalCategory, PromptRegistry
from simforge.session import BlobStore, Session, StageId

FIXTURES = Path(__file__).parent / "fixtures"
REPLIES = FIXTURES / "replies"

BALLOON_CONTENT = (
    "An object submerged in a fluid feels an upward buoyant force equal to the "
    "weight of the fluid it displaces. The buoyant force B depends on the fluid "
    "density p, the displaced volume V, and gravity g through B = p x V x g. "
    "When the buoyant force exceeds the object's weight the object rises; when "
    "the weight is greater it sinks; when the two balance it floats in place."
)


def reply(name: str) -> str:
    return (REPLIES / f"{name}.txt").read_text(encoding="utf-8")


def balloon_replies() -> dict[str, str]:
    return {p.stem: p.read_text(encoding="utf-8") for p in REPLIES.glob("*.txt")}


@pytest.fixture(scope="session")
def registry() -> PromptRegistry:
    return PromptRegistry()


def make_recording_pipeline(cassette: Path, replies: dict, registry: PromptRegistry) -> tuple[Pipeline, ScriptedProvider]:
    provider = ScriptedProvider(replies)
    gateway = Gateway(GatewayConfig(mode="record", cassette_path=cassette, provider=provider))
    return Pipeline(registry, gateway, BlobStore()), provider


def make_replay_pipeline(cassette: Path, registry: PromptRegistry, blobs: BlobStore | None = None) -> Pipeline:
    gateway = Gateway(GatewayConfig(mode="replay", cassette_path=cassette))
    return Pipeline(registry, gateway, blobs or BlobStore())


def run_balloon_walkthrough(pipeline: Pipeline, session: Session | None = None) -> Session:
    """Drive the full forward chain against the balloon replies."""
    s = session or pipeline.create_session()
    pipeline.submit_learning_content(s, BALLOON_CONTENT)
    pipeline.commit_stage(s, StageId.CONCEPT)

    scenarios = pipeline.list_scenarios(s)
    choice = next(o for o in scenarios.items if "Hot Air Balloon" in o.title)
    pipeline.select_scenario(s, choice)
    pipeline.commit_stage(s, StageId.SCENARIO)

    goals = pipeline.list_goals(s)
    goal = next(g for g in goals.items if g.goal_category is GoalCategory.DESCRIPTIVE)
    pipeline.select_goal(s, goal)
    pipeline.commit_stage(s, StageId.LEARNING_GOAL)

    pipeline.derive_procedure(s)
    pipeline.generate_ui_graph(s)
    pipeline.commit_stage(s, StageId.UI_GRAPH)
    pipeline.generate_code(s)
    pipeline.commit_stage(s, StageId.CODE)
    return s


@pytest.fixture(scope="session")
def balloon_cassette(tmp_path_factory, registry) -> Path:
    """A cassette recorded once per test session from the canned replies."""
    cassette = tmp_path_factory.mktemp("cassettes") / "balloon.jsonl"
    pipeline, _ = make_recording_pipeline(cassette, balloon_replies(), registry)
    run_balloon_walkthrough(pipeline)
    return cassette
