RESULTS: list[str] = []


def record(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}"
    RESULTS.append(line)
    print(line)
