"""Pluggable persistence: append-only journals, content-addressed blobs, shares."""
from __future__ import annotations

import hashlib
import json
import threading
from pathlib import Path
from typing import Optional, Protocol


class Storage(Protocol):
    def append_event(self, session_id: str, event: dict) -> None: ...

    def load_events(self, session_id: str) -> list[dict]: ...

    def list_session_ids(self) -> list[str]: ...

    def put_blob(self, data: bytes) -> str: ...

    def get_blob(self, digest: str) -> bytes: ...

    def has_blob(self, digest: str) -> bool: ...

    def put_share(self, record: dict) -> None: ...

    def get_share(self, simulation_id: str) -> Optional[dict]: ...


class FileStorage:
    """Journal log + blob directory + share records under one root."""

    def __init__(self, root: Path):
        self.root = Path(root)
        (self.root / "journal").mkdir(parents=True, exist_ok=True)
        (self.root / "blobs").mkdir(parents=True, exist_ok=True)
        (self.root / "shares").mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    # -- journal -------------------------------------------------------------

    def _journal_path(self, session_id: str) -> Path:
        if not session_id.isalnum():
            raise ValueError(f"invalid session id: {session_id!r}")
        return self.root / "journal" / f"{session_id}.jsonl"

    def append_event(self, session_id: str, event: dict) -> None:
        with self._lock:
            with self._journal_path(session_id).open("a", encoding="utf-8") as f:
                f.write(json.dumps(event, ensure_ascii=False) + "\n")

    def load_events(self, session_id: str) -> list[dict]:
        path = self._journal_path(session_id)
        if not path.exists():
            return []
        return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]

    def list_session_ids(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "journal").glob("*.jsonl"))

    # -- blobs ----------------------------------------------------------------

    def _blob_path(self, digest: str) -> Path:
        return self.root / "blobs" / digest[:2] / digest

    def put_blob(self, data: bytes) -> str:
        digest = hashlib.sha256(data).hexdigest()
        path = self._blob_path(digest)
        if not path.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(data)
        return digest

    def get_blob(self, digest: str) -> bytes:
        return self._blob_path(digest).read_bytes()

    def has_blob(self, digest: str) -> bool:
        return self._blob_path(digest).exists()

    # -- shares ----------------------------------------------------------------

    def put_share(self, record: dict) -> None:
        sid = record["simulationId"]
        if not sid.isalnum():
            raise ValueError(f"invalid simulation id: {sid!r}")
        (self.root / "shares" / f"{sid}.json").write_text(
            json.dumps(record, ensure_ascii=False), encoding="utf-8"
        )

    def get_share(self, simulation_id: str) -> Optional[dict]:
        if not simulation_id.isalnum():
            return None
        path = self.root / "shares" / f"{simulation_id}.json"
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))


class StorageBlobAdapter:
    """Expose Storage blobs through the pipeline's blob-store interface."""

    def __init__(self, storage: Storage):
        self.storage = storage

    def put_text(self, text: str) -> str:
        return self.storage.put_blob(text.encode("utf-8"))

    def get_text(self, digest: str) -> str:
        return self.storage.get_blob(digest).decode("utf-8")

    def put_bytes(self, data: bytes) -> str:
        return self.storage.put_blob(data)

    def get_bytes(self, digest: str) -> bytes:
        return self.storage.get_blob(digest)

    def has(self, digest: str) -> bool:
        return self.storage.has_blob(digest)
