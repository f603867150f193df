"""Collects per-criterion outcomes from test_acceptance for the end-of-run summary."""

RESULTS: dict[int, list[tuple[str, bool, str]]] = {}


def record(criterion: int, part: str, ok: bool, detail: str) -> None:
    RESULTS.setdefault(criterion, []).append((part, ok, detail))


def lines() -> list[str]:
    out = []
    for k in sorted(RESULTS):
        parts = RESULTS[k]
        status = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        detail = "; ".join(f"{p}: {'ok' if ok else 'FAIL'} ({d})" for p, ok, d in parts)
        out.append(f"criterion {k}: {status} | {detail}")
    return out
