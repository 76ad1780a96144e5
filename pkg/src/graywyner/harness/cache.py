"""Construction-cache inspection and garbage collection.

Cache files are self-describing JSON written atomically by the coding
layers: "profile" entries hold one polarization profile keyed by channel
hash, "multilevel" entries describe a lattice chain build and list the
profile keys it depends on.  Collection runs in three steps: protect every
id referenced by a run record in the given output directories, keep every
entry younger than the age floor, then transitively protect the profiles
referenced by surviving multilevel entries.  Only what is left over gets
removed, so a profile serving a live bundle can never be collected out
from under it.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

from .record import read_record_cache_ids


@dataclass(frozen=True)
class CacheEntry:
    key: str
    kind: str
    path: Path
    size_bytes: int
    age_seconds: float
    block_len: Optional[int] = None
    profile_keys: Tuple[str, ...] = ()


@dataclass(frozen=True)
class GcResult:
    kept: Tuple[CacheEntry, ...]
    deleted: Tuple[CacheEntry, ...]
    protected: Tuple[str, ...]

    @property
    def freed_bytes(self) -> int:
        return sum(e.size_bytes for e in self.deleted)


def _parse_entry(path: Path, now: float) -> Optional[CacheEntry]:
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError):
        return None
    if not isinstance(data, dict):
        return None
    kind = data.get("kind")
    if kind not in ("profile", "multilevel"):
        return None
    stat = path.stat()
    block_len = data.get("N")
    return CacheEntry(
        key=path.stem, kind=kind, path=path, size_bytes=stat.st_size,
        age_seconds=max(0.0, now - stat.st_mtime),
        block_len=int(block_len) if block_len is not None else None,
        profile_keys=tuple(data.get("profile_keys", ())))


def scan_cache(cache_dir, now: Optional[float] = None):
    """All recognized cache entries in the directory, sorted by key."""
    directory = Path(cache_dir)
    if not directory.is_dir():
        return []
    stamp = time.time() if now is None else now
    entries = []
    for path in sorted(directory.glob("*.json")):
        entry = _parse_entry(path, stamp)
        if entry is not None:
            entries.append(entry)
    return entries


def referenced_cache_ids(out_dirs) -> set:
    """Union of cache ids referenced by run records under the directories."""
    ids = set()
    for out_dir in out_dirs:
        directory = Path(out_dir)
        if not directory.is_dir():
            continue
        for path in sorted(directory.rglob("*.json")):
            ids |= read_record_cache_ids(path)
    return ids


def cache_gc(cache_dir, out_dirs=(), *, min_age_days: float = 0.0,
             dry_run: bool = False, now: Optional[float] = None) -> GcResult:
    """Remove cache entries not referenced by any record and old enough.

    ``min_age_days`` spares recent entries even when unreferenced; the
    default collects every unreferenced entry.
    """
    entries = scan_cache(cache_dir, now=now)
    by_key = {e.key: e for e in entries}
    protected = referenced_cache_ids(out_dirs)
    age_floor = min_age_days * 86400.0

    survivors = {key for key, entry in by_key.items()
                 if key in protected or entry.age_seconds < age_floor}
    # live bundles pin the profiles they reference
    pending = list(survivors)
    while pending:
        entry = by_key[pending.pop()]
        for profile_key in entry.profile_keys:
            if profile_key in by_key and profile_key not in survivors:
                survivors.add(profile_key)
                pending.append(profile_key)

    kept, deleted = [], []
    for key in sorted(by_key):
        (kept if key in survivors else deleted).append(by_key[key])
    if not dry_run:
        for entry in deleted:
            entry.path.unlink(missing_ok=True)
    return GcResult(kept=tuple(kept), deleted=tuple(deleted),
                    protected=tuple(sorted(protected)))
