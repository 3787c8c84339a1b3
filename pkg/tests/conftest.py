import sys
import numpy as np
import pytest

from nme import GradingSpec


@pytest.fixture
def spec():
    return GradingSpec(K=16, N=4)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def dense_norms(x, N, points=20001):
    """Independent oracle: direct cos/sin evaluation of each derivative on a
    fine grid (no shared code with the kernels)."""
    K = x.spec.K
    th = np.linspace(0.0, 2 * np.pi, points, endpoint=False)
    a, b = x.coeffs[:K + 1], np.concatenate([[0.0], x.coeffs[K + 1:]])
    out = []
    for j in range(N + 1):
        total = np.zeros_like(th)
        for k in range(K + 1):
            # d^j/dθ^j cos(kθ) = k^j cos(kθ + jπ/2)
            total += k ** j * (a[k] * np.cos(k * th + j * np.pi / 2)
                               + b[k] * np.sin(k * th + j * np.pi / 2)) if (k or j == 0) else 0.0
        out.append(np.abs(total).max())
    return np.maximum.accumulate(out)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for mod in list(sys.modules.values()):
        lines = getattr(mod, "ACCEPTANCE_LINES", None) or lines
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
