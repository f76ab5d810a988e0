import numpy as np
import pytest

from cmrf import build_complex, incidence, random_2sc


@pytest.fixture(scope="session")
def filled_triangle():
    """One triangle with all faces present; the smallest closed 2-complex."""
    return build_complex([1, 2, 3], [(1, 2), (1, 3), (2, 3)], [(1, 2, 3)])


@pytest.fixture(scope="session")
def two_cluster_complex():
    """Two filled triangles joined at a vertex, plus a pendant edge.

    Edges in canonical order:
      0=(1,2) 1=(1,3) 2=(2,3) 3=(3,4) 4=(3,5) 5=(4,5) 6=(5,6)
    Coupling coefficients placed only on vertices 3, 4, 5 and on both
    triangles make edge 0 color-separated from edges 3..6 while the
    union graph still connects them, so the fixture tells the two
    separation notions apart.
    """
    return build_complex(
        [1, 2, 3, 4, 5, 6],
        [(1, 2), (1, 3), (2, 3), (3, 4), (3, 5), (4, 5), (5, 6)],
        [(1, 2, 3), (3, 4, 5)],
    )


@pytest.fixture(scope="session")
def bench_complex():
    """A 10-vertex complex with 21 edges, 12 triangles, trivial homology."""
    return random_2sc(10, None, 12, seed=7, num_edges=21)


@pytest.fixture(scope="session")
def bench_incidence(bench_complex):
    return incidence(bench_complex)
