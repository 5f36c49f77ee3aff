"""Canonical on-disk formats for the layer stores.

Every store is either a line-delimited record file (first line is a header
object carrying the schema tag, then one record per line) or a single
canonical JSON document. Serialization is deterministic: sorted keys, fixed
separators, UTF-8, trailing newline. Writes are atomic (temp file + rename).
"""

from __future__ import annotations

import json
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable

from .errors import CorruptState

RAW_SCHEMA = "observatory-raw/1"
NORMALIZED_SCHEMA = "observatory-normalized/1"
ENRICH_SCHEMA = "observatory-enrich/1"
BLOCKS_SCHEMA = "observatory-blocks/1"
MERGED_SCHEMA = "observatory-merged/1"
PROFILES_SCHEMA = "observatory-profiles/1"
STATS_SCHEMA = "observatory-stats/1"
SCORING_SCHEMA = "observatory-scoring/1"


def canonical_line(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def canonical_document(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_records(path: str | Path, schema: str, records: Iterable[dict]) -> None:
    lines = [canonical_line({"schema": schema})]
    lines.extend(canonical_line(record) for record in records)
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_records(path: str | Path, schema: str) -> list[dict]:
    with open(path, encoding="utf-8") as handle:
        lines = [line for line in handle.read().splitlines() if line.strip()]
    if not lines:
        raise CorruptState(f"{path}: empty store")
    header = _parse_line(path, lines[0])
    if header.get("schema") != schema:
        raise CorruptState(
            f"{path}: expected schema {schema!r}, found {header.get('schema')!r}"
        )
    return [_parse_line(path, line) for line in lines[1:]]


def write_document(path: str | Path, obj: dict) -> None:
    atomic_write_text(path, canonical_document(obj))


def read_document(path: str | Path, schema: str | None = None) -> dict:
    with open(path, encoding="utf-8") as handle:
        try:
            obj = json.load(handle)
        except json.JSONDecodeError as exc:
            raise CorruptState(f"{path}: not valid JSON ({exc})") from exc
    if schema is not None and obj.get("schema") != schema:
        raise CorruptState(
            f"{path}: expected schema {schema!r}, found {obj.get('schema')!r}"
        )
    return obj


def _parse_line(path: str | Path, line: str) -> dict:
    try:
        return json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorruptState(f"{path}: corrupt record line ({exc})") from exc


# --- timestamps -------------------------------------------------------------

def parse_rfc3339(value: str) -> datetime:
    """Parse an RFC 3339 timestamp; 'Z' suffixes are accepted."""
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    parsed = datetime.fromisoformat(text)
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed.astimezone(timezone.utc)


def format_rfc3339(value: datetime) -> str:
    return value.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
