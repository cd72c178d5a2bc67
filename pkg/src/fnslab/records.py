"""NDJSON output: 17-significant-digit floats, null for non-finite values.

:class:`RecordWriter` serializes on a worker thread fed by a bounded queue;
a full queue blocks the producer instead of dropping records.
"""

from __future__ import annotations

import csv
import json
import math
import queue
import threading
from pathlib import Path
from typing import Iterable, TextIO

__all__ = ["dumps", "RecordWriter", "read_records", "series", "write_csv"]


def _encode(x) -> str:
    if x is None:
        return "null"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{_encode(v)}" for k, v in x.items()) + "}"
    if isinstance(x, (list, tuple)):
        return "[" + ",".join(_encode(v) for v in x) + "]"
    if hasattr(x, "as_dict"):
        return _encode(x.as_dict())
    try:
        return _encode(float(x))
    except (TypeError, ValueError):
        raise TypeError(f"cannot serialize {type(x).__name__}") from None


def dumps(obj) -> str:
    """One-line JSON with floats written as %.17g."""
    return _encode(obj)


_STOP = object()


class RecordWriter:
    """Append-only NDJSON writer running on its own thread.

    Each line is flushed as it is written, so a killed run leaves a
    parseable file.
    """

    def __init__(self, path, header: dict | None = None, append: bool = False,
                 maxsize: int = 64):
        self.path = Path(path)
        self._q: queue.Queue = queue.Queue(maxsize=maxsize)
        self._fh: TextIO = open(self.path, "a" if append else "w", encoding="utf-8")
        self._error: BaseException | None = None
        self._thread = threading.Thread(target=self._drain, name="ndjson-writer", daemon=True)
        self._thread.start()
        if header is not None:
            self.write({"header": header})

    def _drain(self):
        while True:
            item = self._q.get()
            if item is _STOP:
                break
            try:
                self._fh.write(dumps(item) + "\n")
                self._fh.flush()
            except BaseException as exc:  # surfaced on close
                self._error = exc
        self._fh.close()

    def write(self, obj):
        if self._error:
            raise OSError(f"writing {self.path} failed: {self._error}") from self._error
        self._q.put(obj)

    def close(self):
        self._q.put(_STOP)
        self._thread.join()
        if self._error:
            raise OSError(f"writing {self.path} failed: {self._error}") from self._error

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_records(path) -> list[dict]:
    """Record lines of an NDJSON file; header and summary lines are skipped."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            if isinstance(obj, dict) and "t" in obj:
                out.append(obj)
    return out


def _lookup(node, parts: list[str]):
    # keys may contain dots themselves ("1.5"), so try the longest prefix first
    if not parts:
        return node
    if isinstance(node, list):
        try:
            return _lookup(node[int(parts[0])], parts[1:])
        except (ValueError, IndexError):
            raise KeyError(parts[0]) from None
    if isinstance(node, dict):
        for cut in range(len(parts), 0, -1):
            name = ".".join(parts[:cut])
            if name in node:
                try:
                    return _lookup(node[name], parts[cut:])
                except KeyError:
                    continue
    raise KeyError(parts[0])


def series(records: Iterable[dict], key: str) -> list[tuple[float, object]]:
    """(t, value) pairs in time order; nested keys use dots, e.g. ``defect.value``."""
    rows = []
    for rec in records:
        try:
            rows.append((rec["t"], _lookup(rec, key.split("."))))
        except KeyError:
            raise KeyError(f"series {key!r} not found in records") from None
    rows.sort(key=lambda r: r[0])
    return rows


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_csv(rows, key: str, fh: TextIO):
    """x,y CSV; list-valued series get one column per entry."""
    w = csv.writer(fh, lineterminator="\n")
    width = max((len(v) for _, v in rows if isinstance(v, list)), default=0)
    if width:
        w.writerow(["t"] + [f"{key}.{i}" for i in range(width)])
    else:
        w.writerow(["t", key])
    for t, v in rows:
        vals = v if isinstance(v, list) else [v]
        w.writerow([_cell(float(t))] + [_cell(x) for x in vals])
