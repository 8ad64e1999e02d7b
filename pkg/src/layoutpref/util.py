"""Small shared helpers: apportionment, canonical JSON, atomic writes."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Sequence


def largest_remainder(total: int, weights: Sequence[float]) -> list[int]:
    """Apportion `total` into integer parts proportional to `weights`.

    Floors the exact quotas, then hands out leftover units by descending
    fractional remainder (ties broken by earlier position).
    """
    if total < 0:
        raise ValueError("total must be nonnegative")
    if not weights or any(w < 0 for w in weights) or sum(weights) == 0:
        raise ValueError("weights must be nonempty, nonnegative, not all zero")
    weight_sum = float(sum(weights))
    quotas = [total * w / weight_sum for w in weights]
    parts = [int(q) for q in quotas]
    leftover = total - sum(parts)
    order = sorted(range(len(weights)), key=lambda i: (-(quotas[i] - parts[i]), i))
    for i in order[:leftover]:
        parts[i] += 1
    return parts


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, no whitespace variance."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def atomic_write_text(path: Path, text: str) -> None:
    """Write via temp-file-then-rename so readers never see partial files."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
