"""Engine-state snapshot files with integrity digests.

A state file is canonical JSON: ``{"schema", "window", "state", "digest"}``
where the digest is the SHA-256 of the canonical payload without the digest
field. Loading verifies schema version and digest, then rebuilds the state
by replaying its event log, so load(save(state)) is exact.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

from .engine import EngineState
from .errors import OcgovError

SCHEMA_VERSION = 1


class IoFailure(OcgovError):
    pass


class SchemaMismatch(OcgovError):
    pass


class DigestMismatch(OcgovError):
    pass


def canonical_json(obj: object) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _payload_digest(payload: dict) -> str:
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def dump_state(state: EngineState) -> str:
    """Serialize a state file document; returns its canonical JSON text."""
    payload = {
        "schema": SCHEMA_VERSION,
        "window": state.last_window,
        "state": state.to_dict(),
    }
    document = dict(payload)
    document["digest"] = _payload_digest(payload)
    return canonical_json(document)


def save_state(state: EngineState, path: str | Path) -> str:
    """Atomically write the state file; returns the content digest."""
    text = dump_state(state)
    digest = json.loads(text)["digest"]
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_text(text + "\n", encoding="utf-8")
        os.replace(tmp, path)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return digest


def load_state_text(text: str) -> EngineState:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DigestMismatch(f"state file is not valid JSON: {exc}") from exc
    if not isinstance(document, dict) or "digest" not in document:
        raise DigestMismatch("state file has no digest")
    stored = document.pop("digest")
    if document.get("schema") != SCHEMA_VERSION:
        raise SchemaMismatch(
            f"expected schema {SCHEMA_VERSION}, got {document.get('schema')!r}"
        )
    if _payload_digest(document) != stored:
        raise DigestMismatch("digest does not match file contents")
    return EngineState.from_dict(document["state"])


def load_state(path: str | Path) -> EngineState:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return load_state_text(text)
