"""Commit-log ingestion: parse history dumps into canonical commit records.

The input format is a plain-text dump produced from a repository clone with

    git log --reverse --name-only \
        --pretty=format:'COMMIT%x09%H%x09%ae%x09%at%x0AMSG%x09%s'

i.e. blocks separated by a single blank line, each block being a
``COMMIT<TAB>hash<TAB>author<TAB>unix-seconds`` header, an optional
``MSG<TAB>...`` line, then one changed file path per line. Commits that list
no files (e.g. merges without ``--diff-merges``) are dropped during parsing.

Parsed records are stored as JSON Lines, one object per commit with fields
``hash, author, ts, paths, msg``; the store is always sorted by
``(timestamp, hash)``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, TextIO

from .errors import OcgovError

_HASH_RE = re.compile(r"^[0-9a-fA-F]{40}$")


class LogParseError(OcgovError):
    """A commit block could not be parsed; carries the 1-based block index."""

    def __init__(self, block: int, detail: str) -> None:
        super().__init__(f"block {block}: {detail}")
        self.block = block
        self.detail = detail


class MalformedHeader(LogParseError):
    pass


class BadTimestamp(LogParseError):
    pass


class BadHash(LogParseError):
    pass


class DuplicateHash(OcgovError):
    """Two records in one store share a commit hash."""


@dataclass(frozen=True)
class CommitRecord:
    """One mined commit: the atomic event everything downstream consumes."""

    hash: str
    author: str
    timestamp: int
    paths: tuple[str, ...]
    message: str = ""

    def sort_key(self) -> tuple[int, str]:
        return (self.timestamp, self.hash)

    def to_json_obj(self) -> dict:
        return {
            "hash": self.hash,
            "author": self.author,
            "ts": self.timestamp,
            "paths": list(self.paths),
            "msg": self.message,
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "CommitRecord":
        return cls(
            hash=obj["hash"],
            author=obj["author"],
            timestamp=obj["ts"],
            paths=tuple(obj["paths"]),
            message=obj.get("msg", ""),
        )


def _normalize_author(raw: str) -> str:
    return raw.strip().lower()


@dataclass
class AliasMap:
    """Maps raw author strings to canonical ids, case-insensitively.

    Lookups chase chains (a -> b, b -> c resolves a to c) with a visited
    guard, so resolution is a fixed point: applying it twice never changes
    the result, even for cyclic or chained maps. Unknown authors fall
    through to their normalized (trimmed, lowercased) form.
    """

    entries: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.entries = {
            _normalize_author(k): _normalize_author(v) for k, v in self.entries.items()
        }

    def canonical(self, raw: str) -> str:
        name = _normalize_author(raw)
        seen = set()
        while name in self.entries and name not in seen:
            seen.add(name)
            name = self.entries[name]
        return name

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "AliasMap":
        return cls(entries=dict(obj))


def parse_git_log(text: str) -> list[CommitRecord]:
    """Parse a history dump into commit records sorted by (timestamp, hash).

    Raises MalformedHeader / BadTimestamp / BadHash naming the offending
    1-based block. Blocks with zero file lines are silently omitted.
    """
    if text == "":
        return []
    blocks = text.split("\n\n")
    # A trailing newline (or trailing blank line) leaves empty tail chunks;
    # interior empty chunks mean doubled separators and are malformed.
    while blocks and blocks[-1].strip("\n") == "":
        blocks.pop()

    records: list[CommitRecord] = []
    for i, block in enumerate(blocks, start=1):
        lines = block.split("\n")
        if not lines or not lines[0]:
            raise MalformedHeader(i, "empty block")
        header = lines[0].split("\t")
        if len(header) != 4 or header[0] != "COMMIT":
            raise MalformedHeader(i, f"expected 4 tab-separated fields, got {lines[0]!r}")
        _, commit_hash, author, ts_text = header
        if not _HASH_RE.match(commit_hash):
            raise BadHash(i, f"not a 40-char hex hash: {commit_hash!r}")
        try:
            timestamp = int(ts_text)
        except ValueError:
            raise BadTimestamp(i, f"not an integer: {ts_text!r}") from None

        body = lines[1:]
        message = ""
        if body and body[0].startswith("MSG\t"):
            message = body[0][len("MSG\t"):]
            body = body[1:]
        paths = tuple(line for line in body if line != "")
        if not paths:
            continue
        records.append(CommitRecord(commit_hash, author, timestamp, paths, message))

    records.sort(key=CommitRecord.sort_key)
    return records


def resolve_identities(
    commits: Iterable[CommitRecord], aliases: AliasMap
) -> list[CommitRecord]:
    """Replace each author with its canonical id; order is preserved."""
    return [
        CommitRecord(c.hash, aliases.canonical(c.author), c.timestamp, c.paths, c.message)
        for c in commits
    ]


def write_store(commits: Iterable[CommitRecord], fh: TextIO) -> int:
    """Write commits as JSON Lines in (timestamp, hash) order; returns count."""
    ordered = sorted(commits, key=CommitRecord.sort_key)
    seen: set[str] = set()
    for c in ordered:
        if c.hash in seen:
            raise DuplicateHash(f"duplicate commit hash {c.hash}")
        seen.add(c.hash)
        fh.write(json.dumps(c.to_json_obj(), separators=(",", ":")))
        fh.write("\n")
    return len(ordered)


def read_store(fh: TextIO) -> list[CommitRecord]:
    """Read a JSON Lines commit store; result is sorted by (timestamp, hash)."""
    records = []
    seen: set[str] = set()
    for line in fh:
        line = line.strip()
        if not line:
            continue
        record = CommitRecord.from_json_obj(json.loads(line))
        if record.hash in seen:
            raise DuplicateHash(f"duplicate commit hash {record.hash}")
        seen.add(record.hash)
        records.append(record)
    records.sort(key=CommitRecord.sort_key)
    return records
