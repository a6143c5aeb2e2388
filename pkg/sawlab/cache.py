"""Content-addressed result cache.

Each record is one JSON document at ``<cache_dir>/<hh>/<sha256>.json``. Integers are kept as
decimal strings and rationals as "p/q" strings so no consumer loses precision. A process that
touches the cache registers the keys it uses in ``<cache_dir>/jobs/<pid>.json``; garbage
collection leaves those alone while the process is alive.
"""
import hashlib
import json
import logging
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Set, Tuple, Union

from sawlab.errors import CacheError

logger = logging.getLogger(__name__)

ENGINE_VERSION = "1"
_JOBS_DIR = "jobs"

Exact = Union[int, Fraction]


def encode_value(value: Exact) -> str:
    if isinstance(value, Fraction):
        return str(value) if value.denominator != 1 else str(value.numerator)
    return str(int(value))


def decode_value(text: str) -> Exact:
    value = Fraction(text)
    return value.numerator if value.denominator == 1 else value


def domain_hash(sites: Iterable[Tuple[int, ...]]) -> str:
    canonical = json.dumps(sorted(list(site) for site in sites))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def cache_key(lattice: str, quantity: str, n: int, lam: Exact = 1, domain: str = "") -> str:
    payload = json.dumps([lattice, quantity, n, encode_value(lam), domain, ENGINE_VERSION])
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ResultCache:
    def __init__(self, cache_dir: str):
        self.cache_dir = cache_dir
        self._pinned: Set[str] = set()
        try:
            os.makedirs(os.path.join(cache_dir, _JOBS_DIR), exist_ok=True)
        except OSError as err:
            raise CacheError("Cannot create cache directory", cache_dir) from err
        self.hits = 0
        self.misses = 0

    def path_for(self, key: str) -> str:
        return os.path.join(self.cache_dir, key[:2], f"{key}.json")

    def get(self, key: str) -> Optional[Dict[str, Any]]:
        path = self.path_for(key)
        self._pin(key)
        if not os.path.exists(path):
            self.misses += 1
            return None
        try:
            with open(path, "r") as record_file:
                record = json.load(record_file)
        except (OSError, ValueError):
            logger.warning("Ignoring unreadable cache entry %s", path)
            self.misses += 1
            return None
        os.utime(path)
        self.hits += 1
        return record

    def put(self, key: str, record: Dict[str, Any]) -> None:
        path = self.path_for(key)
        self._pin(key)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        tmp_path = f"{path}.{os.getpid()}.tmp"
        with open(tmp_path, "w") as record_file:
            json.dump(record, record_file, sort_keys=True)
        os.replace(tmp_path, path)

    def close(self) -> None:
        job_path = self._job_path()
        if os.path.exists(job_path):
            os.remove(job_path)
        self._pinned.clear()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()

    def _job_path(self) -> str:
        return os.path.join(self.cache_dir, _JOBS_DIR, f"{os.getpid()}.json")

    def _pin(self, key: str) -> None:
        if key in self._pinned:
            return
        self._pinned.add(key)
        with open(self._job_path(), "w") as job_file:
            json.dump(sorted(self._pinned), job_file)


@dataclass(frozen=True)
class GcSummary:
    entries_before: int
    bytes_before: int
    evicted: int
    bytes_after: int
    pinned: int


def _pid_alive(pid: int) -> bool:
    try:
        os.kill(pid, 0)
    except ProcessLookupError:
        return False
    except PermissionError:
        return True
    return True


def _live_pins(cache_dir: str) -> Set[str]:
    pins: Set[str] = set()
    jobs_dir = os.path.join(cache_dir, _JOBS_DIR)
    if not os.path.isdir(jobs_dir):
        return pins
    for name in os.listdir(jobs_dir):
        job_path = os.path.join(jobs_dir, name)
        try:
            pid = int(name.split(".")[0])
        except ValueError:
            continue
        if not _pid_alive(pid):
            os.remove(job_path)
            continue
        try:
            with open(job_path, "r") as job_file:
                pins.update(json.load(job_file))
        except (OSError, ValueError):
            logger.warning("Unreadable job file %s; its entries stay pinned by age only", job_path)
    return pins


def cache_gc(cache_dir: str, max_bytes: int) -> GcSummary:
    """Evict least recently used entries until the cache fits in ``max_bytes``."""
    if not os.path.isdir(cache_dir):
        raise CacheError("Cache directory does not exist", cache_dir)
    pins = _live_pins(cache_dir)

    entries: List[Tuple[float, int, str, str]] = []
    for root, dirs, files in os.walk(cache_dir):
        dirs[:] = [d for d in dirs if d != _JOBS_DIR]
        for name in files:
            if not name.endswith(".json"):
                continue
            path = os.path.join(root, name)
            stat = os.stat(path)
            entries.append((stat.st_mtime, stat.st_size, path, name[: -len(".json")]))
    entries.sort()

    total = sum(size for _, size, _, _ in entries)
    bytes_before = total
    evicted = 0
    pinned = 0
    for _, size, path, key in entries:
        if total <= max_bytes:
            break
        if key in pins:
            pinned += 1
            continue
        os.remove(path)
        total -= size
        evicted += 1
    if total > max_bytes:
        logger.warning("Cache still holds %d bytes after eviction; pinned entries were kept", total)
    logger.info("Evicted %d of %d cache entries", evicted, len(entries))
    return GcSummary(len(entries), bytes_before, evicted, total, pinned)
