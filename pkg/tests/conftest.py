import time
from contextlib import contextmanager

import numpy as np
import pytest
import torch

_VERDICTS: list[str] = []


@pytest.fixture(autouse=True)
def _threads():
    torch.set_num_threads(1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


class Verdict:
    def __init__(self):
        self.ok = True
        self.details: list[str] = []

    def check(self, cond, detail: str) -> bool:
        cond = bool(cond)
        self.ok &= cond
        self.details.append(detail if cond else f"NOT {detail}")
        return cond


@contextmanager
def _criterion(number: int, title: str):
    v = Verdict()
    t0 = time.perf_counter()
    try:
        yield v
    except Exception as e:
        line = f"criterion {number:>2} FAIL  {title}: {type(e).__name__}: {e}"
        _VERDICTS.append(line)
        print("\n" + line)
        raise
    line = (f"criterion {number:>2} {'PASS' if v.ok else 'FAIL'}  {title}: "
            f"{'; '.join(v.details)} [{time.perf_counter() - t0:.1f} s]")
    _VERDICTS.append(line)
    print("\n" + line)
    assert v.ok, line


@pytest.fixture
def criterion():
    """Context manager that prints one PASS/FAIL line for an acceptance criterion."""
    return _criterion


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
