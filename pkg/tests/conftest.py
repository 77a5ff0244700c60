"""Shared fixtures and brute-force oracles.

The oracles deliberately avoid the package's SVD path: correlations are
computed with explicit two-pass loops so that agreement is evidence, not
tautology.
"""

import math

import numpy as np
import pytest


def hadamard(order):
    """Sylvester Hadamard matrix; ``order`` must be a power of two."""
    h = np.ones((1, 1))
    while h.shape[0] < order:
        h = np.block([[h, h], [h, -h]])
    if h.shape[0] != order:
        raise ValueError("order must be a power of two")
    return h


def orthogonal_design(n=8, p=4):
    """Columns that are centered and mutually orthogonal (n > p)."""
    return hadamard(n)[:, 1 : p + 1].copy()


def identical_columns(n=3, p=2):
    col = np.arange(1.0, n + 1)
    return np.repeat(col[:, None], p, axis=1)


def correlated_pair(r):
    """Two columns of length 8 whose sample correlation is exactly ``r``."""
    h = hadamard(8)
    a, b = h[:, 1], h[:, 2]
    return np.column_stack([a, r * a + math.sqrt(1 - r * r) * b])


def pearson(a, b):
    """Two-pass Pearson correlation in plain Python."""
    n = len(a)
    ma = sum(a) / n
    mb = sum(b) / n
    sab = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    saa = sum((x - ma) ** 2 for x in a)
    sbb = sum((y - mb) ** 2 for y in b)
    return sab / math.sqrt(saa * sbb)


def pearson_matrix(x):
    x = np.asarray(x, dtype=float)
    p = x.shape[1]
    cols = [list(x[:, j]) for j in range(p)]
    r = np.eye(p)
    for j in range(p):
        for k in range(j + 1, p):
            r[j, k] = r[k, j] = pearson(cols[j], cols[k])
    return r


def sR_oracle(x):
    """``sum_j' r_jj'^2`` per variable from the naive correlation matrix."""
    r = pearson_matrix(x)
    return (r * r).sum(axis=0)


def vif_oracle(x):
    """Regress each column on the others with lstsq and return ``1/(1-R^2)``."""
    x = np.asarray(x, dtype=float)
    n, p = x.shape
    out = np.empty(p)
    for j in range(p):
        y = x[:, j]
        others = np.column_stack([np.ones(n), np.delete(x, j, axis=1)])
        beta, *_ = np.linalg.lstsq(others, y, rcond=None)
        resid = y - others @ beta
        r2 = 1 - resid @ resid / ((y - y.mean()) @ (y - y.mean()))
        out[j] = 1 / (1 - r2)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
