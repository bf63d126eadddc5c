"""Rebuild a session by re-executing its journal.

Only events that change session state are dispatched; model transforms are
re-run against the gateway, so under replay cassettes the reconstruction is
byte-identical to the live session. Derived events (warnings, repairs,
intermediate code updates) regenerate themselves and are skipped here.
"""
from __future__ import annotations

import json
from typing import Iterable, Optional

from .errors import ReplayMissError, SimforgeError
from .gateway import ImageAttachment
from .graph import action_from_dict
from .pipeline import Pipeline, choice_from_payload
from .registry import parse_widget_json
from .resolution import AnnotationBox, ResolutionEngine, SuggestionRecord
from .session import JournalEvent, Session


def record_from_wire(wire: dict) -> SuggestionRecord:
    suggestion = parse_widget_json(json.dumps(wire["suggestion"]))
    return SuggestionRecord(
        suggestion,
        valid=wire.get("valid", True),
        reasons=tuple(wire.get("reasons", ())),
        complaint_text=wire.get("complaintText", ""),
        status=wire.get("status", "pending"),
    )


def rebuild_session(
    events: Iterable[JournalEvent],
    pipeline: Pipeline,
    engine: Optional[ResolutionEngine] = None,
) -> Session:
    """Replay journal events into a fresh session."""
    session: Optional[Session] = None
    for event in events:
        name = event.name
        if name == "created":
            session = Session.create(session_id=event.payload["sessionId"])
            continue
        if session is None:
            raise ValueError("journal does not begin with a created event")

        if name == "content_submitted":
            text = pipeline.blobs.get_text(event.payload["contentDigest"])
            pipeline.submit_learning_content(session, text)
        elif name == "stage_refined":
            assert event.stage is not None
            pipeline.refine_stage(session, event.stage, action_from_dict(event.payload["action"]))
        elif name == "committed":
            assert event.stage is not None
            pipeline.commit_stage(session, event.stage)
        elif name == "discarded":
            assert event.stage is not None
            pipeline.discard_stage(session, event.stage)
        elif name == "scenario_selected":
            pipeline.select_scenario(session, choice_from_payload(event.payload["choice"]))
        elif name == "goal_selected":
            choice = choice_from_payload(event.payload["choice"])
            assert not isinstance(choice, str)
            pipeline.select_goal(session, choice)
        elif name == "procedure_derived":
            pipeline.derive_procedure(session)
        elif name == "ui_graph_generated":
            pipeline.generate_ui_graph(session)
        elif name == "code_generated":
            pipeline.generate_code(session)
        elif name == "suggestion_accepted":
            if engine is None:
                raise ValueError("journal contains suggestions but no engine was provided")
            record = record_from_wire(event.payload["record"])
            record.status = "pending"
            screenshot = None
            digest = event.payload.get("screenshotDigest")
            if digest:
                screenshot = ImageAttachment("image/png", pipeline.blobs.get_bytes(digest))
            try:
                engine.apply_suggestion(session, record, screenshot=screenshot)
            except ReplayMissError:
                raise
            except SimforgeError:
                # The live apply failed the same way after journaling acceptance;
                # the partial state it left behind has been reproduced.
                pass
        elif name == "annotation_added":
            session.annotations.append(AnnotationBox(**event.payload["box"]))
        # everything else (warnings, listings, repairs, verdicts, code_updated,
        # ui_graph_updated) is a by-product that the dispatched ops regenerate
    if session is None:
        raise ValueError("empty journal")
    return session
