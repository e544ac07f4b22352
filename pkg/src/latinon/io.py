"""Plain-text Latin squares (``.ls``) and JSON step Latinons (``.latinon.json``)."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import exceptions as exc
from .latin import LatinSquare, validate
from .step import IntervalPartition, SemiLatinon, StepLatinon, validate_latinon

__all__ = ["format_ls", "parse_ls", "read_ls", "write_ls", "latinon_to_dict", "latinon_from_dict",
           "read_latinon", "write_latinon", "dumps_latinon", "loads_latinon"]


def format_ls(L):
    """``n`` on the first line, then one row per line."""
    cells = np.asarray(L)
    lines = [str(cells.shape[0])] + [" ".join(str(int(v)) for v in row) for row in cells]
    return "\n".join(lines) + "\n"


def parse_ls(text):
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        raise exc.NotSquare("empty input")
    try:
        n = int(lines[0])
        rows = [[int(t) for t in ln.split()] for ln in lines[1:]]
    except ValueError as e:
        raise exc.ValidationError(f"malformed .ls input: {e}") from None
    if n < 1 or len(rows) != n or any(len(r) != n for r in rows):
        raise exc.NotSquare(f"header says n = {n} but the table is not {n} x {n}")
    return validate(rows)


def read_ls(path):
    return parse_ls(Path(path).read_text())


def write_ls(L, path):
    Path(path).write_text(format_ls(L))


def latinon_to_dict(W):
    return {
        "row_parts": W.row_parts.lengths.tolist(),
        "col_parts": W.col_parts.lengths.tolist(),
        "value_parts": W.value_parts.lengths.tolist(),
        "alpha": W.alpha.tolist(),
    }


def latinon_from_dict(data, semi=False):
    """Build and fully validate; ``semi=True`` skips the two marginal conditions."""
    try:
        parts = [IntervalPartition(data[key]) for key in ("row_parts", "col_parts", "value_parts")]
        alpha = np.asarray(data["alpha"], dtype=float)
    except KeyError as e:
        raise exc.ValidationError(f"missing field {e}") from None
    W = SemiLatinon(*parts, alpha)
    return W if semi else validate_latinon(W)


def dumps_latinon(W):
    return json.dumps(latinon_to_dict(W)) + "\n"


def loads_latinon(text, semi=False):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise exc.ValidationError(f"malformed JSON: {e}") from None
    return latinon_from_dict(data, semi=semi)


def read_latinon(path, semi=False):
    return loads_latinon(Path(path).read_text(), semi=semi)


def write_latinon(W, path):
    Path(path).write_text(dumps_latinon(W))
