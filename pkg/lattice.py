# Loop-graph lattices
#
# The graphs are two outer chains of K nodes each, joined at x_{-1} and x_{1}
# by a loop made of two branches of L nodes each:
#
#                   A_1 - ... - A_L
#                  /               \
#   x_{-K} - ... - x_{-1}           x_{1} - ... - x_{K}
#                  \               /
#                   B_1 - ... - B_L
#
# At L=1 the branches are the single nodes x_{0-} (A) and x_{0+} (B), for L>1
# they are U1 ... UL (A) and D1 ... DL (B).
#
# All nodes are laid out on one "straightened" coordinate line. That line
# fixes the matrix indices:
#
#   x_{-K}, ..., x_{-1}, A_1, ..., A_L, B_1, ..., B_L, x_{1}, ..., x_{K}
#
# Edges carry an optional coupling tag (g, h or z) and a sign. An edge
# (a, b, c, s) stands for the matrix entries
#
#   H[a, b] = -1 - s*c      H[b, a] = -1 + s*c
#
# so swapping the orientation of an edge flips its sign.
#
# The diagonal (the Laplacean weight u) is 3 at x_{-1} and x_{1} and 2
# everywhere else. This holds at K=1 as well, where x_{-1} and x_{1} only
# have two neighbours. The lattice spacing is fixed to 1.

from dataclasses import dataclass
from typing import NamedTuple


DEBUG = False

LEFT, RIGHT = "left", "right"
BRANCH_A, BRANCH_B = "A", "B"

NONE, G, H, Z = "none", "g", "h", "z"
COUPLINGS = (NONE, G, H, Z)


class GraphError(ValueError):
    pass


class Outer(NamedTuple):
    side: str
    k: int


class Branch(NamedTuple):
    branch: str
    j: int


NodeId = Outer | Branch


class EdgeSpec(NamedTuple):
    a: NodeId
    b: NodeId
    coupling: str = NONE
    sign: int = 1


@dataclass(frozen=True)
class GraphFamilySpec:
    K: int
    L: int
    nodes: tuple[NodeId, ...]
    edges: tuple[EdgeSpec, ...]
    weights: tuple[int, ...]

    @property
    def N(self) -> int:
        return 2 * self.K + 2 * self.L

    def index(self, node: NodeId) -> int:
        return canonical_index(self, node)

    def labels(self) -> list[str]:
        return [node_label(node, self.L) for node in self.nodes]


def build_graph(K: int, L: int = 1) -> GraphFamilySpec:
    """
    Build the (K, L) loop graph with its canonical node ordering.

    >>> spec = build_graph(3, 1)
    >>> spec.N, len(spec.edges)
    (8, 8)
    >>> spec.weights
    (2, 2, 3, 2, 2, 3, 2, 2)
    >>> [e.coupling for e in spec.edges if e.coupling == Z]
    ['z', 'z']
    >>> build_graph(1, 1).labels()
    ['x-1', 'x0-', 'x0+', 'x1']
    >>> build_graph(0, 1)  # doctest: +IGNORE_EXCEPTION_DETAIL
    Traceback (most recent call last):
    ...
    GraphError: K and L must be positive integers, got K=0, L=1
    """
    if not (isinstance(K, int) and isinstance(L, int)) or K < 1 or L < 1:
        raise GraphError(f"K and L must be positive integers, got K={K}, L={L}")

    nodes: list[NodeId] = []
    nodes += [Outer(LEFT, k) for k in range(K, 0, -1)]
    nodes += [Branch(BRANCH_A, j) for j in range(1, L + 1)]
    nodes += [Branch(BRANCH_B, j) for j in range(1, L + 1)]
    nodes += [Outer(RIGHT, k) for k in range(1, K + 1)]

    edges: list[EdgeSpec] = []

    # left chain, z sits on the outermost wedge
    for k in range(K, 1, -1):
        coupling = Z if k == K else NONE
        edges.append(EdgeSpec(Outer(LEFT, k), Outer(LEFT, k - 1), coupling, 1))

    # the loop; interior branch wedges carry no coupling
    edges.append(EdgeSpec(Outer(LEFT, 1), Branch(BRANCH_A, 1), G, 1))
    edges.append(EdgeSpec(Outer(LEFT, 1), Branch(BRANCH_B, 1), H, 1))
    for branch in (BRANCH_A, BRANCH_B):
        for j in range(1, L):
            edges.append(EdgeSpec(Branch(branch, j), Branch(branch, j + 1)))
    edges.append(EdgeSpec(Branch(BRANCH_A, L), Outer(RIGHT, 1), H, -1))
    edges.append(EdgeSpec(Branch(BRANCH_B, L), Outer(RIGHT, 1), G, -1))

    # right chain
    for k in range(1, K):
        coupling = Z if k + 1 == K else NONE
        sign = -1 if coupling == Z else 1
        edges.append(EdgeSpec(Outer(RIGHT, k), Outer(RIGHT, k + 1), coupling, sign))

    weights = tuple(3 if isinstance(n, Outer) and n.k == 1 else 2 for n in nodes)

    spec = GraphFamilySpec(K, L, tuple(nodes), tuple(edges), weights)
    assert len(spec.nodes) == spec.N
    assert len(spec.edges) == spec.N

    if DEBUG:
        import sys

        print(f"Built graph K={K} L={L} N={spec.N}", file=sys.stderr)

    return spec


def canonical_index(spec: GraphFamilySpec, node: NodeId) -> int:
    """
    Position of a node on the straightened coordinate line.

    >>> spec = build_graph(3, 1)
    >>> canonical_index(spec, Outer(LEFT, 1))
    2
    >>> canonical_index(spec, Branch(BRANCH_A, 1))
    3
    >>> canonical_index(build_graph(1, 1), Outer(RIGHT, 1))
    3
    """
    K, L = spec.K, spec.L
    if isinstance(node, Outer) and 1 <= node.k <= K:
        if node.side == LEFT:
            return K - node.k
        if node.side == RIGHT:
            return K + 2 * L + node.k - 1
    if isinstance(node, Branch) and 1 <= node.j <= L:
        if node.branch == BRANCH_A:
            return K + node.j - 1
        if node.branch == BRANCH_B:
            return K + L + node.j - 1
    raise GraphError(f"Node {node!r} does not belong to the K={K}, L={L} graph")


def reflect(spec: GraphFamilySpec, node: NodeId) -> NodeId:
    """
    Left-right reflection of the graph: x_{-k} <-> x_{k}, A_j <-> B_{L+1-j}.

    >>> spec = build_graph(3, 2)
    >>> reflect(spec, Branch(BRANCH_A, 1))
    Branch(branch='B', j=2)
    >>> reflect(spec, Outer(LEFT, 3))
    Outer(side='right', k=3)
    """
    canonical_index(spec, node)
    if isinstance(node, Outer):
        return Outer(RIGHT if node.side == LEFT else LEFT, node.k)
    other = BRANCH_B if node.branch == BRANCH_A else BRANCH_A
    return Branch(other, spec.L + 1 - node.j)


def node_label(node: NodeId, L: int = 1) -> str:
    if isinstance(node, Outer):
        return f"x-{node.k}" if node.side == LEFT else f"x{node.k}"
    if L == 1:
        return "x0-" if node.branch == BRANCH_A else "x0+"
    return f"U{node.j}" if node.branch == BRANCH_A else f"D{node.j}"


def edge_indices(spec: GraphFamilySpec, edge: EdgeSpec) -> tuple[int, int, str, int]:
    """
    Edge in index form, oriented so that a < b.
    """
    a, b = canonical_index(spec, edge.a), canonical_index(spec, edge.b)
    if a > b:
        return b, a, edge.coupling, -edge.sign
    return a, b, edge.coupling, edge.sign


#
# JSON documents
#


def graph_to_json(spec: GraphFamilySpec) -> dict:
    edges = []
    for edge in spec.edges:
        a, b, coupling, sign = edge_indices(spec, edge)
        edges.append({"a": a, "b": b, "coupling": coupling, "sign": sign})
    return {
        "K": spec.K,
        "L": spec.L,
        "N": spec.N,
        "nodes": spec.labels(),
        "edges": edges,
        "weights": list(spec.weights),
    }


def graph_from_json(doc: dict) -> GraphFamilySpec:
    """
    Rebuild a graph from its JSON document. Only canonical documents are
    accepted, so the result always equals `build_graph(K, L)`.
    """
    try:
        spec = build_graph(int(doc["K"]), int(doc["L"]))
    except (KeyError, TypeError) as e:
        raise GraphError(f"Malformed graph document: {e}") from e
    if graph_to_json(spec) != doc:
        raise GraphError("Graph document is not the canonical (K, L) loop graph")
    return spec


#
# Test functions
#


def _edge_set(spec: GraphFamilySpec) -> set[tuple[int, int, str, int]]:
    return {edge_indices(spec, e) for e in spec.edges}


def test_reflection_preserves_edges():
    for K in range(1, 11):
        for L in range(1, 11):
            spec = build_graph(K, L)
            edges = _edge_set(spec)
            mapped = set()
            for a, b, coupling, sign in edges:
                ra = canonical_index(spec, reflect(spec, spec.nodes[a]))
                rb = canonical_index(spec, reflect(spec, spec.nodes[b]))
                # reflection reverses the orientation of every wedge
                if ra < rb:
                    mapped.add((ra, rb, coupling, sign))
                else:
                    mapped.add((rb, ra, coupling, -sign))
            assert mapped == edges, (K, L)
            for node in spec.nodes:
                assert reflect(spec, reflect(spec, node)) == node


def test_index_is_bijection():
    for K in range(1, 8):
        for L in range(1, 5):
            spec = build_graph(K, L)
            indices = [canonical_index(spec, n) for n in spec.nodes]
            assert indices == list(range(spec.N))


def test_edges_and_weights():
    for K in range(1, 11):
        for L in range(1, 11):
            spec = build_graph(K, L)
            assert len(spec.edges) == 2 * (K - 1) + 2 + 2 * L == spec.N
            assert spec.weights.count(3) == 2
            assert sum(spec.weights) == 2 * spec.N + 2
            n_z = sum(1 for e in spec.edges if e.coupling == Z)
            assert n_z == (2 if K >= 2 else 0)

            # connected, with exactly one cycle
            seen = {0}
            stack = [0]
            adjacency: dict[int, list[int]] = {}
            for a, b, _, _ in _edge_set(spec):
                adjacency.setdefault(a, []).append(b)
                adjacency.setdefault(b, []).append(a)
            while stack:
                for m in adjacency[stack.pop()]:
                    if m not in seen:
                        seen.add(m)
                        stack.append(m)
            assert len(seen) == spec.N


def test_coupling_placement():
    spec = build_graph(1, 1)
    assert spec.N == 4 and len(spec.edges) == 4
    assert _edge_set(spec) == {
        (0, 1, G, 1),
        (0, 2, H, 1),
        (1, 3, H, -1),
        (2, 3, G, -1),
    }

    spec = build_graph(3, 2)
    edges = _edge_set(spec)
    assert (2, 5, H, 1) in edges
    assert (6, 7, G, -1) in edges
    assert (0, 1, Z, 1) in edges
    assert (8, 9, Z, -1) in edges
    assert spec.labels() == ["x-3", "x-2", "x-1", "U1", "U2", "D1", "D2", "x1", "x2", "x3"]


def test_unknown_node():
    spec = build_graph(2, 1)
    for node in (Outer(LEFT, 3), Branch(BRANCH_A, 2), Outer("middle", 1)):
        try:
            canonical_index(spec, node)
        except GraphError:
            pass
        else:
            raise AssertionError(f"{node} accepted")


def test_json_round_trip():
    spec = build_graph(4, 3)
    doc = graph_to_json(spec)
    assert doc["N"] == 14
    assert graph_from_json(doc) == spec


if __name__ == "__main__":
    import doctest

    doctest.testmod()
    test_reflection_preserves_edges()
    test_index_is_bijection()
    test_edges_and_weights()
    test_coupling_placement()
    test_unknown_node()
    test_json_round_trip()
    print("All tests OK")
