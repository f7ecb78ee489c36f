import pytest

import calderon


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile (or load cached) kernels once so timed tests run hot."""
    calderon.warmup()
