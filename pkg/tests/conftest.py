import numpy as np
import pytest

from lapret.model import UnitSeries

# criterion number -> (ok, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, ok: bool, detail: str) -> bool:
    ACCEPTANCE[criterion] = (bool(ok), detail)
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


def unit(uid, outcomes, covariates=(), event=None, first_day=1):
    return UnitSeries(uid, np.asarray(outcomes, float), np.asarray(covariates, float),
                      0 if event is None else 1, event, first_day)


@pytest.fixture
def make_unit():
    return unit
