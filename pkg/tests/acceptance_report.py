"""Collects one pass/fail line per acceptance criterion."""

LINES: list[str] = []


def report(name: str, ok: bool, detail: str) -> bool:
    line = f"{name:<4} {'PASS' if ok else 'FAIL'}  {detail}"
    LINES.append(line)
    print(line, flush=True)
    return ok
