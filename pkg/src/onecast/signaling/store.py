"""Append-only three-table store and the in-process key-value cache.

Each table lives in one JSON-lines file; startup replays every line to
rebuild the in-memory index, so byte-identical logs always produce identical
query results. Rows are never updated in place: the current state of a user
is simply the last row appended for that uuid.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

from ..errors import StoreError

TABLE_SCHEMAS = {
    "user": ("id", "name", "password", "email"),
    "user_net_info": ("id", "uuid", "name", "ip", "port", "state"),
    "published_list": ("id", "time", "name", "title", "img_url", "ip", "port", "is_online"),
}


class AppendStore:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._tables: dict[str, list[dict]] = {}
        for table in TABLE_SCHEMAS:
            self._tables[table] = self._replay(table)

    def _path(self, table: str) -> Path:
        return self.root / f"{table}.jsonl"

    def _replay(self, table: str) -> list[dict]:
        path = self._path(table)
        rows = []
        if not path.exists():
            return rows
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise StoreError(
                        f"{path.name}:{lineno}: unreadable log line ({exc})"
                    ) from None
                if set(row) != set(TABLE_SCHEMAS[table]):
                    raise StoreError(
                        f"{path.name}:{lineno}: columns do not match {table} schema"
                    )
                rows.append(row)
        return rows

    def append(self, table: str, row: dict) -> dict:
        """Validate against the table schema, assign the next id, persist."""
        schema = TABLE_SCHEMAS.get(table)
        if schema is None:
            raise StoreError(f"unknown table {table!r}")
        expected = set(schema) - {"id"}
        if set(row) != expected:
            raise StoreError(
                f"row for {table} must have columns {sorted(expected)}, "
                f"got {sorted(row)}"
            )
        with self._lock:
            rows = self._tables[table]
            full = {"id": len(rows) + 1, **row}
            with open(self._path(table), "a", encoding="utf-8") as fh:
                fh.write(json.dumps(full) + "\n")
            rows.append(full)
            return dict(full)

    def query(self, table: str, predicate=None) -> list[dict]:
        if table not in self._tables:
            raise StoreError(f"unknown table {table!r}")
        with self._lock:
            rows = [dict(r) for r in self._tables[table]]
        if predicate is None:
            return rows
        return [r for r in rows if predicate(r)]

    def current_net_state(self, uuid: str) -> dict | None:
        """Last appended user_net_info row for a uuid, or None."""
        rows = self.query("user_net_info", lambda r: r["uuid"] == uuid)
        return rows[-1] if rows else None

    def find_user(self, *, name=None, email=None) -> dict | None:
        for row in self.query("user"):
            if name is not None and row["name"] == name:
                return row
            if email is not None and row["email"] == email:
                return row
        return None


class KvCache:
    """Last-write-wins map with a single lock; a stand-in for an external
    key-value cache process."""

    def __init__(self):
        self._data: dict[str, str] = {}
        self._lock = threading.Lock()

    def set(self, key: str, value) -> None:
        with self._lock:
            self._data[str(key)] = value

    def get(self, key: str, default=None):
        with self._lock:
            return self._data.get(str(key), default)

    def delete(self, key: str) -> None:
        with self._lock:
            self._data.pop(str(key), None)

    def items(self) -> list[tuple[str, str]]:
        with self._lock:
            return list(self._data.items())
