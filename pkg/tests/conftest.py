import numpy as np
import pytest

from ultrafunctions import (CLOSED_INTERVAL, Domain, GeneratorSet, build_rule, build_space,
                            monomials)


def interval(a=-1.0, b=1.0):
    return Domain(a, b, CLOSED_INTERVAL)


def space_of(gens, domain=None, panels=4, order=16, **kw):
    domain = domain or interval()
    return build_space(GeneratorSet(tuple(gens), domain), build_rule(domain, panels=panels, order=order,
                                                                      **kw))


@pytest.fixture
def sym():
    return interval()


@pytest.fixture
def p1():
    return space_of(monomials(1))


@pytest.fixture
def const01():
    return space_of(monomials(0), interval(0.0, 1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
