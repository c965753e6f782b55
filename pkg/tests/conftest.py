import pytest

from urdufake.corpus import generate_synthetic
from urdufake.preprocess import Resources

FAKE_POOL = tuple(f"jhoot{i}" for i in range(30))
REAL_POOL = tuple(f"sach{i}" for i in range(30))


@pytest.fixture(scope="session")
def resources():
    return Resources.default()


@pytest.fixture(scope="session")
def synthetic_train():
    return generate_synthetic(7, 200, (FAKE_POOL, REAL_POOL), (6, 14), split="train")


@pytest.fixture(scope="session")
def synthetic_test():
    return generate_synthetic(1007, 50, (FAKE_POOL, REAL_POOL), (6, 14), split="test")


@pytest.fixture()
def small_train():
    return generate_synthetic(3, 25, (FAKE_POOL, REAL_POOL), (5, 10), split="train")


@pytest.fixture()
def small_test():
    return generate_synthetic(4, 10, (FAKE_POOL, REAL_POOL), (5, 10), split="test")
