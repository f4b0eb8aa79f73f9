"""
On-disk storage for LLM responses.

`ResponseCache` is content-addressed: each response lives in its own JSON file
named after the request digest. `TranscriptRecorder` appends every exchange of a
run to a JSONL transcript, which the scripted backend can replay.
"""

import json
import logging
import os
import tempfile
import threading
from pathlib import Path
from typing import Any

logger = logging.getLogger(__name__)

LOCK_STRIPES = 256


class ResponseCache:
    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._locks = tuple(threading.Lock() for _ in range(LOCK_STRIPES))

    def _path(self, hexdigest: str) -> Path:
        return self.directory / hexdigest[:2] / f"{hexdigest}.json"

    def lock(self, hexdigest: str) -> threading.Lock:
        """
        Lock guarding one key's load-then-store. Keys share a fixed set of
        stripes, so the lock count stays bounded however many keys are seen.
        """
        return self._locks[int(hexdigest[:8], 16) % LOCK_STRIPES]

    def load(self, hexdigest: str) -> dict[str, Any] | None:
        path = self._path(hexdigest)
        if not path.exists():
            return None
        try:
            with open(path, "r", encoding="utf-8") as f:
                return json.load(f)
        except (OSError, json.JSONDecodeError) as error:
            logger.warning("Ignoring unreadable cache entry %s: %s", path, error)
            return None

    def store(self, hexdigest: str, payload: dict[str, Any]):
        path = self._path(hexdigest)
        path.parent.mkdir(parents=True, exist_ok=True)
        # write-then-rename so readers never see a partial file
        fd, tmp_name = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                json.dump(payload, f, ensure_ascii=False, sort_keys=True)
            os.replace(tmp_name, path)
        except BaseException:
            Path(tmp_name).unlink(missing_ok=True)
            raise

    def clear(self) -> int:
        removed = 0
        for path in self.directory.glob("*/*.json"):
            path.unlink()
            removed += 1
        return removed


class TranscriptRecorder:
    """Appends one JSON line per distinct exchange: digest, kind and response."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._seen: set[str] = set()
        self._lock = threading.Lock()
        if self.path.exists():
            self._seen.update(load_transcript(self.path))

    def record(self, hexdigest: str, kind: str, response: Any):
        with self._lock:
            if hexdigest in self._seen:
                return
            self._seen.add(hexdigest)
            with open(self.path, "a", encoding="utf-8") as f:
                line = {"digest": hexdigest, "kind": kind, "response": response}
                f.write(json.dumps(line, ensure_ascii=False, sort_keys=True) + "\n")


def load_transcript(path: Path) -> dict[str, Any]:
    """Reads a transcript into a digest -> response mapping."""
    responses: dict[str, Any] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                entry = json.loads(line)
                responses[entry["digest"]] = entry["response"]
            except (json.JSONDecodeError, KeyError, TypeError) as error:
                raise ValueError(f"{path}:{line_number}: invalid transcript line ({error})")
    return responses
