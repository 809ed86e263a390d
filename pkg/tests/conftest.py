import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from srti.core_model import Instance, random_instance

settings.register_profile("srti", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("srti")


def cyclic3() -> Instance:
    """Three agents with cyclic strict preferences: no stable matching."""
    return Instance.from_ranks({"a": {"b": 1, "c": 2}, "b": {"c": 1, "a": 2}, "c": {"a": 1, "b": 2}})


def pair() -> Instance:
    return Instance.from_ranks({"a": {"b": 1}, "b": {"a": 1}})


@st.composite
def instances(draw, max_n: int = 8):
    n = draw(st.integers(0, max_n))
    p = draw(st.sampled_from([0.2, 0.4, 0.6]))
    tie = draw(st.sampled_from([0.0, 0.3, 0.6]))
    seed = draw(st.integers(0, 10**6))
    return random_instance(n, p, tie, seed)


@pytest.fixture
def cyclic():
    return cyclic3()


@pytest.fixture
def mutual_pair():
    return pair()
