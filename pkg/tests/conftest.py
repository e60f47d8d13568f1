CRITERIA: dict[int, tuple[bool, str]] = {}


def record(num: int, ok: bool, detail: str = "") -> None:
    prev = CRITERIA.get(num)
    if prev is not None:
        ok = ok and prev[0]
        detail = f"{prev[1]}; {detail}" if prev[1] else detail
    CRITERIA[num] = (ok, detail)
    print(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(CRITERIA):
        ok, detail = CRITERIA[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
