from __future__ import annotations

import numpy as np
import pytest

from sharpcone.algebra import Algebra
from sharpcone.cone import ConeContext
from sharpcone.linalg import psd_sqrt
from sharpcone.modular import standard_form

RHO_A = np.diag([2 / 3, 1 / 3]).astype(complex)


def m2_state(rho=RHO_A):
    """M_2 in standard form on 2x2 matrices with xi0 = rho^(1/2)."""
    A = Algebra(((2, 2),))
    xi0 = A.vector([psd_sqrt(rho)])
    return standard_form(A, xi0)


def two_block_state():
    """M_2 (+) M_1 in standard form with a faithful non-tracial state."""
    A = Algebra(((2, 2), (1, 1)))
    xi0 = A.vector([psd_sqrt(np.diag([0.45, 0.25])), np.array([[np.sqrt(0.3)]])])
    return standard_form(A, xi0)


def vec_of(md, *blocks):
    """``x xi0`` for the block element ``x``."""
    return md.algebra.embed([np.asarray(b, dtype=complex) for b in blocks]) @ md.xi0


@pytest.fixture
def fix_a():
    return m2_state()


@pytest.fixture
def fix_a_ctx(fix_a):
    return ConeContext(fix_a)


@pytest.fixture
def fix_b():
    A = Algebra(((1, 1), (1, 1)))
    return standard_form(A, np.array([1, 1], dtype=complex) / np.sqrt(2))


@pytest.fixture
def fix_c():
    return two_block_state()


@pytest.fixture
def fix_t():
    return m2_state(np.eye(2, dtype=complex) / 2)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[key])
