"""Collections of sessions on disk.

A corpus directory holds ``corpus.json``::

    {"sessions": [{"id": "s000", "transcript": "s000.jsonl", "manifest": "s000.audio.json"}, ...]}

A directory without ``corpus.json`` is scanned for ``*.jsonl`` transcripts
with sibling ``<stem>.audio.json`` manifests.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Iterator, Mapping

import numpy as np

from .dialog import Session, load_session


class Corpus:
    """Sessions plus lazily loaded, cached audio."""

    def __init__(self, sessions, audio: Mapping[str, np.ndarray] | None = None):
        self.sessions: list[Session] = sorted(sessions, key=lambda s: s.id)
        self._by_id = {s.id: s for s in self.sessions}
        self._audio = dict(audio or {})
        self._lock = threading.Lock()

    def __iter__(self) -> Iterator[Session]:
        return iter(self.sessions)

    def __len__(self) -> int:
        return len(self.sessions)

    def session(self, session_id: str) -> Session:
        return self._by_id[session_id]

    def audio(self, session_id: str) -> np.ndarray:
        with self._lock:
            if session_id not in self._audio:
                self._audio[session_id] = self._by_id[session_id].load_audio()
            return self._audio[session_id]

    def sample_rate(self, session_id: str) -> int:
        s = self._by_id[session_id]
        if s.audio is None:
            raise ValueError(f"session {session_id} has no audio reference")
        return s.audio.sample_rate


def load_corpus(path: str | Path) -> Corpus:
    path = Path(path)
    if path.is_file():
        index, base = json.loads(path.read_text(encoding="utf-8")), path.parent
    elif (path / "corpus.json").exists():
        index, base = json.loads((path / "corpus.json").read_text(encoding="utf-8")), path
    else:
        base = path
        index = {"sessions": [{"id": p.stem, "transcript": p.name, "manifest": p.stem + ".audio.json"}
                              for p in sorted(path.glob("*.jsonl"))]}
    sessions = []
    for entry in index["sessions"]:
        man = base / entry["manifest"] if entry.get("manifest") else None
        if man is not None and not man.exists():
            man = None
        sessions.append(load_session(base / entry["transcript"], man, entry.get("id")))
    return Corpus(sessions)
