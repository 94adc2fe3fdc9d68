"""Records one pass/fail line per acceptance criterion."""
from __future__ import annotations

import time
from contextlib import contextmanager

RESULTS: list[str] = []


@contextmanager
def criterion(number: int, title: str):
    """Yields a dict for detail text; the line is recorded however the block exits."""
    rec = {"detail": "", "ok": False}
    t0 = time.perf_counter()
    try:
        yield rec
        rec["ok"] = True
    finally:
        took = time.perf_counter() - t0
        tag = "PASS" if rec["ok"] else "FAIL"
        line = f"[{tag}] criterion {number}: {title} ({rec['detail']}; {took:.2f}s)"
        RESULTS.append(line)
        print(line)
