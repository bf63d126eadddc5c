"""Command-line entry points: serve the HTTP API or run a replay walkthrough."""
from __future__ import annotations

import sys
from pathlib import Path

import click

from .drivers import CdpDriver, FakeDriver
from .gateway import Gateway, GatewayConfig, HttpProvider
from .pipeline import Pipeline
from .registry import PromptRegistry
from .session import StageId
from .storage import FileStorage


def _build_gateway(mode: str, cassette: str | None, provider_url: str | None, api_key: str | None, model: str) -> Gateway:
    provider = None
    if mode in ("live", "record"):
        if not provider_url or not api_key:
            raise click.UsageError("live/record modes need --provider-url and --api-key")
        provider = HttpProvider(provider_url, api_key, model)
    cassette_path = Path(cassette) if cassette else None
    return Gateway(GatewayConfig(mode=mode, cassette_path=cassette_path, provider=provider))


@click.group()
def main() -> None:
    """Authoring engine for interactive HTML simulations."""


@main.command()
@click.option("--storage", "storage_dir", type=click.Path(), default="./simforge-data", show_default=True)
@click.option("--mode", type=click.Choice(["live", "record", "replay"]), default="replay", show_default=True)
@click.option("--cassette", type=click.Path(), default=None, help="Cassette path for record/replay modes.")
@click.option("--provider-url", default=None, help="Chat-completion endpoint base URL.")
@click.option("--api-key", default=None, envvar="SIMFORGE_API_KEY")
@click.option("--model", default="claude-3-5-sonnet-latest", show_default=True)
@click.option("--driver-url", default=None, help="Remote-debugging endpoint for the real browser driver.")
@click.option("--driver-script", type=click.Path(exists=True), default=None, help="Behavior file for the fake driver.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(storage_dir, mode, cassette, provider_url, api_key, model, driver_url, driver_script, host, port):
    """Run the HTTP API."""
    import uvicorn

    from .service import ServiceConfig, create_app

    gateway = _build_gateway(mode, cassette, provider_url, api_key, model)
    if driver_url:
        driver_factory = lambda: CdpDriver(driver_url)
    elif driver_script:
        driver_factory = lambda: FakeDriver.from_file(driver_script)
    else:
        driver_factory = lambda: FakeDriver([{"match": "*", "elements": {}}])
    config = ServiceConfig(
        storage=FileStorage(Path(storage_dir)),
        gateway=gateway,
        driver_factory=driver_factory,
    )
    uvicorn.run(create_app(config), host=host, port=port)


@main.command()
@click.option("--cassette", type=click.Path(exists=True), required=True)
@click.option("--content", "content_file", type=click.Path(exists=True), required=True)
@click.option("--scenario-index", default=0, show_default=True, help="Which listed scenario to pick.")
@click.option("--goal-index", default=0, show_default=True, help="Which listed goal to pick.")
@click.option("--out", "out_file", type=click.Path(), default=None, help="Write the final document here.")
def walkthrough(cassette, content_file, scenario_index, goal_index, out_file):
    """Replay the full forward chain from a recorded cassette."""
    registry = PromptRegistry()
    gateway = Gateway(GatewayConfig(mode="replay", cassette_path=Path(cassette)))
    pipeline = Pipeline(registry, gateway)

    session = pipeline.create_session()
    text = Path(content_file).read_text(encoding="utf-8")
    pipeline.submit_learning_content(session, text)
    pipeline.commit_stage(session, StageId.CONCEPT)
    click.echo(f"concept graph: {len(session.stages[StageId.CONCEPT].content.nodes)} nodes")

    scenarios = pipeline.list_scenarios(session)
    choice = scenarios.items[scenario_index]
    click.echo(f"scenario: {choice.title}")
    pipeline.select_scenario(session, choice)
    pipeline.commit_stage(session, StageId.SCENARIO)

    goals = pipeline.list_goals(session)
    goal = goals.items[goal_index]
    category = goal.goal_category.value if goal.goal_category else "?"
    click.echo(f"goal ({category}): {goal.title}")
    pipeline.select_goal(session, goal)
    pipeline.commit_stage(session, StageId.LEARNING_GOAL)

    pipeline.derive_procedure(session)
    pipeline.generate_ui_graph(session)
    pipeline.commit_stage(session, StageId.UI_GRAPH)
    click.echo(f"ui graph: {len(session.stages[StageId.UI_GRAPH].content.nodes)} nodes")

    pipeline.generate_code(session)
    pipeline.commit_stage(session, StageId.CODE)
    document = session.stages[StageId.CODE].content
    click.echo(f"document: {len(document)} bytes, issues: {session.stages[StageId.CODE].issues or 'none'}")
    if out_file:
        Path(out_file).write_text(document, encoding="utf-8")
        click.echo(f"wrote {out_file}")


if __name__ == "__main__":
    sys.exit(main())
