import contextlib
import time

import pytest

_CRITERIA = {}


class _Record:
    def __init__(self):
        self.detail = ""


@pytest.fixture
def criterion():
    """Context manager recording PASS/FAIL, detail text and runtime for one acceptance criterion.

    ``budget`` seconds is asserted after the body completes.
    """

    @contextlib.contextmanager
    def run(number, title, budget):
        rec = _Record()
        start = time.perf_counter()
        try:
            yield rec
            elapsed = time.perf_counter() - start
            assert elapsed < budget, f"runtime {elapsed:.1f} s exceeds {budget} s"
        except BaseException as exc:
            elapsed = time.perf_counter() - start
            _CRITERIA[number] = ("FAIL", title, f"{rec.detail} | {type(exc).__name__}: {exc}".strip(" |"),
                                 elapsed)
            raise
        _CRITERIA[number] = ("PASS", title, rec.detail, elapsed)
        print(f"criterion {number}: PASS {title} ({elapsed:.1f} s) {rec.detail}")

    return run


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status, title, detail, elapsed = _CRITERIA[number]
        line = f"criterion {number:2d}: {status} {title} ({elapsed:.1f} s)"
        if detail:
            line += f" - {detail.splitlines()[0][:200]}"
        terminalreporter.write_line(line)
