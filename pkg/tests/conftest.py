from __future__ import annotations

import pytest

from ebpd.learner import learn_schema
from ebpd.stack import CLASSES, bundled, gen_experience


@pytest.fixture(scope="session")
def bundle():
    return bundled()


@pytest.fixture(scope="session")
def stack_experience():
    # the 4+4 class-1 experience that the scope and learner examples are built on
    return gen_experience(1, 4)


@pytest.fixture(scope="session")
def library(bundle):
    """One schema per problem class, each learned from a 4+4 experience."""
    return [learn_schema(gen_experience(c, 4), bundle.hierarchy) for c in CLASSES]
