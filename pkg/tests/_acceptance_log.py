"""Collects one pass/fail line per acceptance criterion for the terminal summary."""

import contextlib
import time

_RESULTS = {}


@contextlib.contextmanager
def criterion(number, title: str):
    """``number`` is an int or a label such as "6-drift" for a split criterion."""
    start = time.perf_counter()
    detail = {}
    try:
        yield detail
    except BaseException:
        _RESULTS[number] = ("FAIL", title, time.perf_counter() - start, detail)
        raise
    _RESULTS[number] = ("PASS", title, time.perf_counter() - start, detail)


def _order(label):
    text = str(label)
    digits = ""
    for ch in text:
        if not ch.isdigit():
            break
        digits += ch
    return (int(digits or 0), text[len(digits):])


def lines():
    out = []
    for number in sorted(_RESULTS, key=_order):
        status, title, elapsed, detail = _RESULTS[number]
        extra = "; ".join(f"{k}={v}" for k, v in detail.items())
        out.append(f"criterion {str(number):>8} {status}  {title}  ({elapsed:.1f} s){'  ' + extra if extra else ''}")
    return out
