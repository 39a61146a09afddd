import numpy as np
import pytest

from rockland import _kernels, uea
from rockland.lie import builtin

KERNELS = {"python": _kernels.PyStraightener}
try:
    from rockland._cstraighten import Straightener as _C

    KERNELS["cython"] = _C
except ImportError:  # extension not built
    pass


@pytest.fixture(params=sorted(KERNELS))
def kernel(request, monkeypatch):
    """Run the test once per available straightening kernel."""
    monkeypatch.setattr(uea, "Straightener", KERNELS[request.param])
    monkeypatch.setattr(uea, "_straighteners", {})
    return request.param


@pytest.fixture
def H():
    return builtin("heisenberg1")


@pytest.fixture
def engel():
    return builtin("engel")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []
    config.addinivalue_line("markers", "acceptance: acceptance criterion with a PASS/FAIL summary line")


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for the terminal summary, then assert it."""
    lines = request.config.stash[ACCEPTANCE_KEY]

    def record(name: str, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
