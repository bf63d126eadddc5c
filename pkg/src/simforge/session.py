"""Per-author session state: staged abstraction slots plus an append-only journal.

Stages form a total order (concept < scenario < learning goal < UI graph <
code). Content may only be generated into a stage when every earlier stage
is committed; editing an earlier stage marks all later non-empty stages
stale rather than deleting them, so their last content stays inspectable.
"""
from __future__ import annotations

import hashlib
import threading
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Union

from .graph import Graph, serialize_graph
from .registry import GoalCategory, OptionItem


class StageId(Enum):
    CONCEPT = "concept"
    SCENARIO = "scenario"
    LEARNING_GOAL = "learning_goal"
    UI_GRAPH = "ui_graph"
    CODE = "code"


STAGE_ORDER: tuple[StageId, ...] = (
    StageId.CONCEPT,
    StageId.SCENARIO,
    StageId.LEARNING_GOAL,
    StageId.UI_GRAPH,
    StageId.CODE,
)

GRAPH_STAGES = STAGE_ORDER[:4]


def stages_before(stage: StageId) -> tuple[StageId, ...]:
    return STAGE_ORDER[: STAGE_ORDER.index(stage)]


def stages_after(stage: StageId) -> tuple[StageId, ...]:
    return STAGE_ORDER[STAGE_ORDER.index(stage) + 1 :]


class StageStatus(Enum):
    EMPTY = "empty"
    DRAFT = "draft"
    COMMITTED = "committed"
    STALE = "stale"


StageContent = Union[Graph, str]


@dataclass
class StageSlot:
    status: StageStatus = StageStatus.EMPTY
    content: Optional[StageContent] = None
    committed_content: Optional[StageContent] = None
    provenance: list[int] = field(default_factory=list)
    issues: list[str] = field(default_factory=list)

    def content_text(self) -> Optional[str]:
        if self.content is None:
            return None
        return serialize_graph(self.content) if isinstance(self.content, Graph) else self.content


class Actor(Enum):
    HUMAN = "human"
    MODEL = "model"


class JournalOp(Enum):
    INSPECT = "inspect"
    REFINE = "refine"
    VALIDATE = "validate"
    DIRECT = "direct"
    TRANSFORM = "transform"
    LIFECYCLE = "lifecycle"


JOURNAL_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class JournalEvent:
    seq: int
    timestamp: float
    who: Actor
    op: JournalOp
    name: str
    stage: Optional[StageId] = None
    payload: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "v": JOURNAL_SCHEMA_VERSION,
            "seq": self.seq,
            "ts": self.timestamp,
            "who": self.who.value,
            "op": self.op.value,
            "name": self.name,
            "stage": self.stage.value if self.stage else None,
            "payload": self.payload,
        }

    @staticmethod
    def from_dict(data: dict) -> "JournalEvent":
        return JournalEvent(
            seq=data["seq"],
            timestamp=data["ts"],
            who=Actor(data["who"]),
            op=JournalOp(data["op"]),
            name=data["name"],
            stage=StageId(data["stage"]) if data.get("stage") else None,
            payload=data.get("payload", {}),
        )


def digest_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class BlobStore:
    """Content-addressed bytes; the file-backed variant lives in storage.py."""

    def __init__(self) -> None:
        self._blobs: dict[str, bytes] = {}

    def put_text(self, text: str) -> str:
        data = text.encode("utf-8")
        digest = hashlib.sha256(data).hexdigest()
        self._blobs[digest] = data
        return digest

    def get_text(self, digest: str) -> str:
        return self._blobs[digest].decode("utf-8")

    def put_bytes(self, data: bytes) -> str:
        digest = hashlib.sha256(data).hexdigest()
        self._blobs[digest] = data
        return digest

    def get_bytes(self, digest: str) -> bytes:
        return self._blobs[digest]

    def has(self, digest: str) -> bool:
        return digest in self._blobs


@dataclass
class Session:
    id: str
    learning_content: Optional[str] = None
    stages: dict[StageId, StageSlot] = field(default_factory=lambda: {s: StageSlot() for s in STAGE_ORDER})
    scenario_choice: Optional[Union[OptionItem, str]] = None
    goal_choice: Optional[OptionItem] = None
    procedure: Optional["ProcedureDerivation"] = None
    journal: list[JournalEvent] = field(default_factory=list)
    annotations: list[Any] = field(default_factory=list)
    suggestions: list[Any] = field(default_factory=list)
    guided_cases: list[Any] = field(default_factory=list)
    lock: threading.RLock = field(default_factory=threading.RLock, repr=False, compare=False)

    @staticmethod
    def create(session_id: Optional[str] = None) -> "Session":
        s = Session(id=session_id or uuid.uuid4().hex)
        s.append_event(Actor.HUMAN, JournalOp.LIFECYCLE, "created", payload={"sessionId": s.id})
        return s

    def append_event(
        self,
        who: Actor,
        op: JournalOp,
        name: str,
        stage: Optional[StageId] = None,
        payload: Optional[dict] = None,
    ) -> JournalEvent:
        event = JournalEvent(
            seq=len(self.journal),
            timestamp=time.time(),
            who=who,
            op=op,
            name=name,
            stage=stage,
            payload=payload or {},
        )
        self.journal.append(event)
        return event

    def slot(self, stage: StageId) -> StageSlot:
        return self.stages[stage]

    def committed_graph(self, stage: StageId) -> Graph:
        slot = self.stages[stage]
        if slot.status is not StageStatus.COMMITTED or not isinstance(slot.committed_content, Graph):
            raise ValueError(f"stage {stage.value} has no committed graph")
        return slot.committed_content

    def mark_later_stages_stale(self, stage: StageId) -> list[StageId]:
        changed = []
        for later in stages_after(stage):
            slot = self.stages[later]
            if slot.status is not StageStatus.EMPTY:
                slot.status = StageStatus.STALE
                changed.append(later)
        return changed

    def state_snapshot(self) -> dict:
        """Comparable view of everything the journal replays into."""

        def choice_view(choice):
            if choice is None:
                return None
            if isinstance(choice, str):
                return {"freeText": choice}
            return {
                "title": choice.title,
                "description": choice.description,
                "goalCategory": choice.goal_category.value if choice.goal_category else None,
            }

        snapshot: dict = {
            "learningContent": self.learning_content,
            "scenarioChoice": choice_view(self.scenario_choice),
            "goalChoice": choice_view(self.goal_choice),
            "procedure": self.procedure.to_dict() if self.procedure else None,
            "annotations": [dict(a) if isinstance(a, dict) else a.to_dict() for a in self.annotations],
            "stages": {},
        }
        for stage, slot in self.stages.items():
            committed = slot.committed_content
            snapshot["stages"][stage.value] = {
                "status": slot.status.value,
                "content": slot.content_text(),
                "committed": serialize_graph(committed) if isinstance(committed, Graph) else committed,
                "issues": list(slot.issues),
            }
        return snapshot


@dataclass
class ProcedureDerivation:
    """Branch outputs feeding UI-graph generation; never a user-visible stage."""

    category: GoalCategory
    independent_var: Optional[str] = None
    dependent_var: Optional[str] = None
    explanatory_process: Optional[str] = None
    experimental_object: Optional[str] = None
    underlying_process: Optional[str] = None
    procedure_text: str = ""

    def __post_init__(self) -> None:
        if self.category is GoalCategory.DESCRIPTIVE:
            ok = self.independent_var and self.dependent_var
        elif self.category is GoalCategory.EXPLANATORY:
            ok = self.independent_var and self.dependent_var and self.explanatory_process
        else:
            ok = self.experimental_object and self.underlying_process
        if not ok and self.procedure_text:
            raise ValueError(f"derivation fields incomplete for {self.category.value} goal")

    def to_dict(self) -> dict:
        return {
            "category": self.category.value,
            "independentVar": self.independent_var,
            "dependentVar": self.dependent_var,
            "explanatoryProcess": self.explanatory_process,
            "experimentalObject": self.experimental_object,
            "underlyingProcess": self.underlying_process,
            "procedureText": self.procedure_text,
        }
