"""Download dataset documents into a content-addressed local cache.

Cache layout::

    <cache_dir>/<sha256 of content>.json
    <cache_dir>/index.json            # {url: sha256}

The cache directory defaults to ``$TEMPOGRAPH_CACHE_DIR`` or
``~/.cache/tempograph``.
"""

import hashlib
import json
import os
import tempfile
import threading
import time
import urllib.error
import urllib.request
from pathlib import Path

CACHE_ENV = "TEMPOGRAPH_CACHE_DIR"
INDEX_NAME = "index.json"

_locks = {}
_locks_guard = threading.Lock()


class FetchError(RuntimeError):
    pass


class DatasetNotFoundError(FetchError):
    pass


class CacheIntegrityError(FetchError):
    pass


def default_cache_dir():
    env = os.environ.get(CACHE_ENV)
    return Path(env) if env else Path.home() / ".cache" / "tempograph"


def _lock_for(key):
    with _locks_guard:
        return _locks.setdefault(key, threading.Lock())


def _sha256(data):
    return hashlib.sha256(data).hexdigest()


def _atomic_write(path, data):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_index(cache_dir):
    try:
        with open(cache_dir / INDEX_NAME) as fh:
            index = json.load(fh)
    except (OSError, json.JSONDecodeError):
        return {}
    return index if isinstance(index, dict) else {}


def _write_index(cache_dir, index):
    _atomic_write(cache_dir / INDEX_NAME, (json.dumps(index, indent=1, sort_keys=True) + "\n").encode())


def _download(url, retries, backoff, timeout, opener):
    last = None
    for attempt in range(retries):
        try:
            with opener(url, timeout=timeout) as resp:
                return resp.read()
        except urllib.error.HTTPError as exc:
            if exc.code == 404:
                raise DatasetNotFoundError(f"{url}: not found (HTTP 404)") from None
            last = exc
        except (urllib.error.URLError, OSError) as exc:
            last = exc
        if attempt + 1 < retries:
            time.sleep(backoff * 2**attempt)
    raise FetchError(f"{url}: giving up after {retries} attempts ({last})")


def fetch_dataset(url, cache_dir=None, retries=3, backoff=0.5, timeout=30.0, opener=urllib.request.urlopen):
    """Return the local path of ``url``'s content, downloading at most once.

    A cached file whose hash no longer matches its name is deleted and
    reported with :class:`CacheIntegrityError`; calling again downloads it
    afresh.
    """
    if not isinstance(url, str) or "://" not in url:
        raise ValueError(f"not a URL: {url!r}")
    cache_dir = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    cache_dir.mkdir(parents=True, exist_ok=True)
    with _lock_for((str(cache_dir.resolve()), url)):
        digest = _read_index(cache_dir).get(url)
        if digest:
            path = cache_dir / f"{digest}.json"
            if path.exists():
                if _sha256(path.read_bytes()) != digest:
                    path.unlink()
                    _forget(cache_dir, url)
                    raise CacheIntegrityError(f"cached copy of {url} is corrupt ({path.name}); removed, fetch again")
                return path
        data = _download(url, retries, backoff, timeout, opener)
        digest = _sha256(data)
        path = cache_dir / f"{digest}.json"
        _atomic_write(path, data)
        with _lock_for((str(cache_dir.resolve()), INDEX_NAME)):
            index = _read_index(cache_dir)
            index[url] = digest
            _write_index(cache_dir, index)
        return path


def _forget(cache_dir, url):
    with _lock_for((str(cache_dir.resolve()), INDEX_NAME)):
        index = _read_index(cache_dir)
        index.pop(url, None)
        _write_index(cache_dir, index)
