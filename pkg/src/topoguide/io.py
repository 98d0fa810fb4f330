"""Versioned, checksummed files for models, schedules and manifests; edge-list datasets.

Checksummed files carry one JSON header line, then a JSON payload::

    {"format": "topoguide-model", "version": 1, "sha256": "...", "bytes": 1234}
    {...payload...}
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .diffusion import NoiseSchedule
from .errors import ChecksumError, FormatError
from .graph import Graph, read_edgelist, write_edgelist
from .neural import MpnnModel, model_from_dict, model_to_dict

VERSION = 1


def write_checked(path, fmt: str, payload: dict) -> None:
    body = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
    header = {"format": fmt, "version": VERSION, "sha256": hashlib.sha256(body).hexdigest(),
              "bytes": len(body)}
    Path(path).write_bytes(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n" + body)


def read_checked(path, fmt: str) -> dict:
    raw = Path(path).read_bytes()
    head, sep, body = raw.partition(b"\n")
    try:
        header = json.loads(head)
    except ValueError:
        raise ChecksumError(f"{path}: unreadable or truncated header") from None
    if not sep or not isinstance(header, dict):
        raise ChecksumError(f"{path}: truncated file")
    if header.get("format") != fmt:
        raise FormatError(f"{path}: expected a {fmt!r} file, found {header.get('format')!r}")
    if not isinstance(header.get("version"), int) or header["version"] > VERSION:
        raise FormatError(f"{path}: format version {header.get('version')} is newer than "
                          f"supported version {VERSION}")
    if len(body) != header.get("bytes") or hashlib.sha256(body).hexdigest() != header.get("sha256"):
        raise ChecksumError(f"{path}: checksum mismatch (truncated or corrupted)")
    return json.loads(body)


def save_model(path, model: MpnnModel, schedule: NoiseSchedule | None = None, meta=None) -> None:
    payload = model_to_dict(model)
    if schedule is not None:
        payload["schedule"] = schedule.to_dict()
    if meta:
        payload["meta"] = meta
    write_checked(path, "topoguide-model", payload)


def load_model_bundle(path) -> tuple[MpnnModel, NoiseSchedule | None, dict]:
    d = read_checked(path, "topoguide-model")
    sched = NoiseSchedule.from_dict(d["schedule"]) if "schedule" in d else None
    return model_from_dict(d), sched, d.get("meta", {})


def load_model(path) -> MpnnModel:
    return load_model_bundle(path)[0]


def save_schedule(path, schedule: NoiseSchedule) -> None:
    write_checked(path, "topoguide-schedule", schedule.to_dict())


def load_schedule(path) -> NoiseSchedule:
    return NoiseSchedule.from_dict(read_checked(path, "topoguide-schedule"))


def save_manifest(path, manifest: dict) -> None:
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")


def load_manifest(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def save_dataset(path, graphs: list[Graph]) -> None:
    write_edgelist(path, graphs)


def load_dataset(path) -> list[Graph]:
    """Edge-list file, or GraphML file/directory (by extension)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset not found: {path}")
    if path.is_dir() or path.suffix == ".graphml":
        from .datasets import load_graphml
        return load_graphml(path)
    return read_edgelist(path)
