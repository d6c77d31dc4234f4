import csv
import hashlib
import json
import os
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence

from pydantic import BaseModel, ValidationError

from ..models import TimeSeries
from .errors import DataFormatError, ModelFormatError
from .logging import log_event
from .versioning import VersionManager, default_versions


def canonical_json(document: Dict[str, Any]) -> str:
    """Sorted keys, no whitespace; floats keep their shortest exact repr"""
    return json.dumps(document, sort_keys=True, separators=(",", ":"))


def fingerprint(document: Dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON rendering"""
    return hashlib.sha256(canonical_json(document).encode()).hexdigest()


class RunStorage:
    def __init__(self, out_dir: str):
        """Output directory of one run; created on first write"""
        self.out_dir = out_dir

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def _prepare(self, name: str) -> str:
        os.makedirs(self.out_dir, exist_ok=True)
        return self.path(name)

    def write_json(self, name: str, document: Dict[str, Any]) -> str:
        target = self._prepare(name)
        with open(target, "w", encoding="utf-8") as f:
            f.write(canonical_json(document))
            f.write("\n")
        log_event("file_written", {"path": target, "kind": "json"})
        return target

    def write_jsonl(self, name: str, rows: Iterable[BaseModel]) -> str:
        target = self._prepare(name)
        count = write_jsonl(rows, target)
        log_event("file_written", {"path": target, "kind": "jsonl", "rows": count})
        return target

    def write_rows(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
        target = self._prepare(name)
        with open(target, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(header)
            writer.writerows(rows)
        log_event("file_written", {"path": target, "kind": "csv"})
        return target


# ---------------------------------------------------------------------------
# model documents
# ---------------------------------------------------------------------------


def write_document(document: Dict[str, Any], path: str) -> str:
    """Write a versioned model document and return its fingerprint"""
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(canonical_json(document))
        f.write("\n")
    digest = fingerprint(document)
    log_event("model_written", {"path": path, "fingerprint": digest})
    return digest


def read_document(path: str, versions: Optional[VersionManager] = None) -> Dict[str, Any]:
    versions = versions or default_versions
    try:
        with open(path, encoding="utf-8") as f:
            document = json.load(f)
    except FileNotFoundError:
        raise ModelFormatError(f"Model file not found: {path}", {"path": path}) from None
    except json.JSONDecodeError as e:
        raise ModelFormatError(
            f"Model file is not valid JSON: {e.msg}", {"path": path, "line": e.lineno}
        ) from None
    if not isinstance(document, dict) or "format_version" not in document:
        raise ModelFormatError("Model document has no format_version", {"path": path})
    versions.check(document["format_version"])
    return document


# ---------------------------------------------------------------------------
# JSONL
# ---------------------------------------------------------------------------


def write_jsonl(rows: Iterable[BaseModel], path: str) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row.model_dump(), sort_keys=True))
            f.write("\n")
            count += 1
    return count


def read_jsonl(path: str) -> Iterator[Dict[str, Any]]:
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as e:
                raise DataFormatError(
                    f"Line {line_no}: invalid JSON ({e.msg})", {"path": path, "line": line_no}
                ) from None


# ---------------------------------------------------------------------------
# corpus CSV: id, interval-seconds, label (may be empty), values...
# ---------------------------------------------------------------------------


def write_corpus(data: Sequence[TimeSeries], path: str) -> str:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        for s in data:
            writer.writerow([s.id, repr(s.interval), s.label or "", *map(repr, s.values)])
    log_event("corpus_written", {"path": path, "rows": len(data)})
    return path


def parse_corpus_row(row: List[str], line_no: int) -> TimeSeries:
    if len(row) < 4:
        raise DataFormatError(
            f"Line {line_no}: expected id, interval, label and at least one value",
            {"line": line_no, "fields": len(row)},
        )
    try:
        return TimeSeries(
            id=row[0],
            interval=float(row[1]),
            label=row[2] or None,
            values=[float(v) for v in row[3:]],
        )
    except (ValueError, ValidationError) as e:
        raise DataFormatError(f"Line {line_no}: {e}", {"line": line_no}) from None


def read_corpus(path: str) -> List[TimeSeries]:
    with open(path, encoding="utf-8", newline="") as f:
        rows = [
            parse_corpus_row(row, line_no)
            for line_no, row in enumerate(csv.reader(f), start=1)
            if row
        ]
    if not rows:
        raise DataFormatError(f"Corpus file is empty: {path}", {"path": path})
    return rows
