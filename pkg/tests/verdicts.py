"""PASS/FAIL lines of the acceptance criteria, echoed in the pytest summary."""

LINES: list[str] = []


def verdict(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    LINES.append(line)
    print(line, flush=True)
    assert ok, line
