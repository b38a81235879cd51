import numpy as np
import pytest

import lbspectra as lb


@pytest.fixture(scope="session")
def catalog():
    return lb.builtin_domains()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def solve_domain(domain, N, V0, K=10, truncation="eigenvalue", nodes_per_halfwave=4, resolution=None):
    spec = lb.enumerate_basis(domain.geometry, N, truncation)
    grid = lb.quadrature(domain.geometry, resolution or lb.default_resolution(spec, nodes_per_halfwave))
    H = lb.assemble(spec, domain.region, V0, grid)
    return H, lb.eigendecompose(H, K), grid


ACCEPTANCE = {}


def record(number, ok, detail):
    """Store one acceptance line; printed again in the terminal summary."""
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
