"""Shared registry of acceptance verdicts, printed at the end of a pytest run."""

RESULTS: dict[str, str] = {}


def record(key: str, ok: bool, detail: str) -> bool:
    line = f"{'PASS' if ok else 'FAIL'} {key}: {detail}"
    RESULTS[key] = line
    print(line)
    return ok
