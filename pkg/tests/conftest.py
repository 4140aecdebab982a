import zlib

import pytest

from qthermo.sampling import stream


@pytest.fixture
def rng(request):
    # one independent stream per test, keyed by the test name
    return stream(20240, zlib.crc32(request.node.name.encode()))
