import math

import numpy as np
import pytest
from hypothesis import strategies as st

from zenotransport.amplitudes import QubitAmplitudes

R2 = 1 / math.sqrt(2)


def random_qubit(rng: np.random.Generator) -> QubitAmplitudes:
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return QubitAmplitudes.from_vector(v / np.linalg.norm(v))


@st.composite
def qubits(draw):
    re = st.floats(-1, 1, allow_nan=False)
    v = np.array([complex(draw(re), draw(re)), complex(draw(re), draw(re))])
    n = np.linalg.norm(v)
    if n < 1e-3:
        v, n = np.array([1, 0], dtype=complex), 1.0
    return QubitAmplitudes.from_vector(v / n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
