"""Deterministic, diff-friendly JSON text.

Objects are expanded one key per line with sorted keys; any array whose
compact form is short and contains no objects stays on one line.
"""
from __future__ import annotations

import json

_INLINE_WIDTH = 100


def _compact(value) -> str:
    return json.dumps(value, sort_keys=True, separators=(", ", ": "), ensure_ascii=False)


def _has_object(value) -> bool:
    if isinstance(value, dict):
        return True
    if isinstance(value, list):
        return any(_has_object(v) for v in value)
    return False


def dumps(value, indent: int = 0) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent + 1)}"
                 for k, v in sorted(value.items(), key=lambda kv: str(kv[0]))]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(value, list):
        if not value:
            return "[]"
        flat = _compact(value)
        if not _has_object(value) and len(flat) <= _INLINE_WIDTH:
            return flat
        items = [inner + dumps(v, indent + 1) for v in value]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    return json.dumps(value, ensure_ascii=False)


def dump_text(value) -> str:
    return dumps(value) + "\n"
