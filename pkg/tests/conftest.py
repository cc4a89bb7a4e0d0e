import numpy as np
import pytest

from pwdlab.rng import derive_rng


@pytest.fixture
def rng() -> np.random.Generator:
    return derive_rng(1234, 0)


def make_rng(*path: int) -> np.random.Generator:
    return derive_rng(987654321, *path)
