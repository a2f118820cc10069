import sys

import numpy as np
import pytest

from robustrep import _fallback
from robustrep import _backend


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


KERNEL_MODULES = [pytest.param(_fallback, id="python")]
if _backend.BACKEND == "cython":
    KERNEL_MODULES.append(pytest.param(_backend.kernels, id="cython"))


@pytest.fixture(params=KERNEL_MODULES)
def kernel_module(request):
    return request.param


@pytest.fixture(params=["python", _backend.BACKEND] if _backend.BACKEND != "python" else ["python"])
def backend(request, monkeypatch):
    """Run a test once per available kernel backend."""
    import robustrep.penalties as pen
    mod = _fallback if request.param == "python" else _backend.kernels
    monkeypatch.setattr(pen, "kernels", mod)
    return request.param


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    verdicts = getattr(mod, "VERDICTS", None)
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(verdicts):
        terminalreporter.write_line(verdicts[number])
