"""Shared wire-protocol conformance fixture and shape checkers.

The fixture file ships with this package and is consumed by both sides of
the protocol: engine tests validate that local victims and the HTTP client
honor the shapes, and a serving implementation replays the same requests
against its live endpoints. Checkers raise :class:`ConformanceError` with
the case name so failures are attributable.
"""

from __future__ import annotations

import json
import math
from importlib import resources
from typing import Mapping, Sequence

PROB_SUM_TOLERANCE = 1e-6


class ConformanceError(AssertionError):
    """A response violated the wire-protocol contract."""


def load_fixture() -> dict:
    """The canonical request/expectation fixture bundled with the package."""
    text = resources.files("textsiege").joinpath("data/conformance.json").read_text("utf-8")
    return json.loads(text)


def check_health_payload(body: Mapping, required_keys: Sequence[str] = ("status", "labels")) -> None:
    for key in required_keys:
        if key not in body:
            raise ConformanceError(f"/health payload missing {key!r}: {body}")
    if body.get("status") != "ok":
        raise ConformanceError(f"/health status is not 'ok': {body.get('status')!r}")
    labels = body.get("labels")
    if not isinstance(labels, int) or labels < 0:
        raise ConformanceError(f"/health labels must be a non-negative int, got {labels!r}")


def check_predict_payload(request_texts: Sequence[str], body: Mapping, label_count: int) -> None:
    """Row-aligned probability matrix, k wide, rows summing to 1 within 1e-6."""
    probs = body.get("probs")
    if not isinstance(probs, list):
        raise ConformanceError(f"missing or non-list 'probs' in predict payload: {body}")
    if len(probs) != len(request_texts):
        raise ConformanceError(
            f"predict rows not aligned: {len(request_texts)} texts, {len(probs)} rows"
        )
    for i, row in enumerate(probs):
        if not isinstance(row, list) or len(row) != label_count:
            raise ConformanceError(f"predict row {i} is not a {label_count}-wide list: {row!r}")
        for p in row:
            if not isinstance(p, (int, float)) or p < 0 or not math.isfinite(p):
                raise ConformanceError(f"predict row {i} has invalid probability {p!r}")
        total = math.fsum(row)
        if abs(total - 1.0) > PROB_SUM_TOLERANCE:
            raise ConformanceError(f"predict row {i} sums to {total!r}, not 1 +/- 1e-6")


def check_translate_payload(request_texts: Sequence[str], body: Mapping) -> None:
    texts = body.get("texts")
    if not isinstance(texts, list):
        raise ConformanceError(f"missing or non-list 'texts' in translate payload: {body}")
    if len(texts) != len(request_texts):
        raise ConformanceError(
            f"translate rows not aligned: {len(request_texts)} in, {len(texts)} out"
        )
    for i, text in enumerate(texts):
        if not isinstance(text, str):
            raise ConformanceError(f"translate output {i} is not a string: {text!r}")


def check_error_payload(body: Mapping) -> None:
    """Non-200 responses must carry a human-readable {"error": ...}."""
    if not isinstance(body.get("error"), str) or not body["error"]:
        raise ConformanceError(f"error response lacks a non-empty 'error' string: {body}")
