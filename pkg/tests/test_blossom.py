import networkx as nx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from busnoise import blossom, kernels

MATCHERS = [("python", blossom.max_weight_matching)]
if "cython" in kernels.available():
    MATCHERS.append(("cython", kernels.get("cython").max_weight_matching))


@st.composite
def weighted_graphs(draw):
    n = draw(st.integers(2, 11))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    return n, [(i, j, 2 * draw(st.integers(1, 60))) for i, j in chosen]


def _weight(mate, edges):
    w = {(min(i, j), max(i, j)): x for i, j, x in edges}
    total = 0
    for v, u in enumerate(mate):
        if u > v:
            total += w[(v, u)]
    return total


def _reference(n, edges):
    g = nx.Graph()
    g.add_nodes_from(range(n))
    g.add_weighted_edges_from(edges)
    return sum(g[a][b]["weight"] for a, b in nx.max_weight_matching(g))


@pytest.mark.parametrize("name,matcher", MATCHERS)
@given(graph=weighted_graphs())
def test_matches_networkx_optimum(name, matcher, graph):
    n, edges = graph
    mate = matcher(n, edges)
    for v, u in enumerate(mate):
        assert u == -1 or mate[u] == v
    assert _weight(mate, edges) == _reference(n, edges)


@pytest.mark.parametrize("name,matcher", MATCHERS)
def test_empty_and_triangle(name, matcher):
    assert list(matcher(3, [])) == [-1, -1, -1]
    mate = list(matcher(3, [(0, 1, 4), (1, 2, 10), (0, 2, 6)]))
    assert mate[1] == 2 and mate[2] == 1 and mate[0] == -1


@pytest.mark.parametrize("name,matcher", MATCHERS)
def test_blossom_needed(name, matcher):
    # odd cycle with a pendant: optimum pairs the pendant into the cycle
    edges = [(0, 1, 16), (1, 2, 16), (2, 0, 16), (2, 3, 14), (3, 4, 2)]
    assert _weight(list(matcher(5, edges)), edges) == _reference(5, edges)
