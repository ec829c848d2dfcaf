import pytest

from core.models import ColoredBipartiteGraph, PartAssignment, RainbowMatching, SolverConfig
from generators.latin_generator import LatinGenerator
from generators.steiner_generator import SteinerGenerator
from services.rng_service import make_rng

# Ten-vertex switching gadget. Vertex ids:
#   X: x0=0, x1=1, x1'=2, x2=3, x3=4     Y: y0=0, y1=1, y1'=2, y2=3, y3=4
# Colours: c2=0, c3=1, e1=2, e2=3, m=4, a=5, b=6, b'=7
GADGET_EDGES = [
    (0, 2, 0),  # x0 y1'   c2 (connector, colour held by x2 y2)
    (2, 0, 1),  # x1' y0   c3 (connector, colour free)
    (1, 2, 2),  # x1 y1'   e1 in M
    (2, 1, 3),  # x1' y1   e2 in M
    (1, 1, 5),  # x1 y1    a  (main path)
    (3, 3, 0),  # x2 y2    c2 in M
    (4, 4, 4),  # x3 y3    m  in M
    (3, 4, 6),  # x2 y3    b  (freeing cycle)
    (4, 3, 7),  # x3 y2    b' (freeing cycle)
]
GADGET_MATCHING = [(1, 2, 2), (2, 1, 3), (3, 3, 0), (4, 4, 4)]
GADGET_POOLS = [frozenset({5}), frozenset(), frozenset({6}), frozenset({7}), frozenset(), frozenset()]


@pytest.fixture
def rng():
    return make_rng(12345, "tests")


@pytest.fixture
def latin_generator():
    return LatinGenerator()


@pytest.fixture
def steiner_generator():
    return SteinerGenerator()


@pytest.fixture
def fast_config():
    return SolverConfig(restarts=4, kicks=4, steiner_retries=4, seed=7)


@pytest.fixture
def fano(steiner_generator):
    return steiner_generator.skolem_sts(7)


@pytest.fixture
def gadget_graph():
    return ColoredBipartiteGraph(range(5), range(5), range(8), GADGET_EDGES)


@pytest.fixture
def gadget_matching():
    return RainbowMatching(GADGET_MATCHING)


@pytest.fixture
def gadget_parts():
    return PartAssignment(
        x_parts=(frozenset({1, 2}), frozenset({3, 4}), frozenset({0})),
        y_parts=(frozenset({1, 2}), frozenset({3, 4}), frozenset({0})),
        c_parts=(frozenset({2, 3, 5}), frozenset({0, 4, 6, 7}), frozenset({1})),
    )


@pytest.fixture
def gadget_pools():
    return list(GADGET_POOLS)
