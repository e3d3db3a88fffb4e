import numpy as np
import pytest

from tensorcast.tensor import reconstruct


def uniform_factors(dims, rank, seed):
    rng = np.random.default_rng(seed)
    return tuple(rng.random((d, rank)) for d in dims)


def low_rank_tensor(dims, rank, seed):
    """Exact rank-``rank`` tensor built from nonnegative uniform factors."""
    return reconstruct(uniform_factors(dims, rank, seed))


@pytest.fixture
def rank3_tensor():
    return low_rank_tensor((20, 30, 40), 3, seed=1)


# one summary line per acceptance criterion, filled in by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
