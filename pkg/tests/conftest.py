"""Shared fixtures and the acceptance summary printed at session end."""
import numpy as np
import pytest

from mhslab.initcond import parse_init, realize

# criterion number -> list of (clause, passed, detail); filled by test_acceptance
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        clauses = ACCEPTANCE[num]
        ok = all(c[1] for c in clauses)
        detail = "; ".join(f"{name}: {'pass' if p else 'FAIL'} ({d})" for name, p, d in clauses)
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'} | {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def field(text, n=64):
    return realize(parse_init(text), n)
