# Hamiltonian matrices H^(K,L)(g, h; z)
#
# The matrix is the discrete Laplacean of the loop graph (weights on the
# diagonal, -1 on every wedge) with non-Hermitian couplings added on the
# tagged wedges. For an edge (a, b) tagged with coupling c and sign s:
#
#   H[a, b] = -1 - s*c      H[b, a] = -1 + s*c
#
# At K=3, L=1 this reproduces
#
#   2   -1-z
#   -1+z  2   -1
#        -1    3   -1-g -1-h
#             -1+g  2        -1+h
#             -1+h       2   -1+g
#                  -1-h -1-g  3   -1
#                            -1    2   -1+z
#                                 -1-z  2
#
# Symbolic matrices are written in the amended couplings gamma and delta,
# with g = gamma + delta and h = gamma - delta. Every coefficient table of
# the secular polynomials is even in gamma, delta and z, so this is the
# natural variable set; g and h never appear as ring variables.
#
# Float matrices are only ever produced by rounding an exact matrix.

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from lattice import G, H, NONE, Z, GraphFamilySpec, build_graph, edge_indices
from polyring import DELTA, GAMMA, R, PolyError
from polyring import Z as ZVAR
from polyring import poly_from_json, poly_to_json, pretty, rational_to_str, to_fraction


RATIONAL, POLY, FLOAT = "rational", "poly", "float"


def parse_rational(text: str | int | Fraction) -> Fraction:
    """
    Parse "1/4", "0.25", "-3" or "2e-3" exactly (decimal place value).

    >>> parse_rational("0.25")
    Fraction(1, 4)
    >>> parse_rational("-3/6")
    Fraction(-1, 2)
    >>> parse_rational("1.0e-2")
    Fraction(1, 100)
    """
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    try:
        return Fraction(text.strip())
    except (AttributeError, ValueError, ZeroDivisionError) as e:
        raise ValueError(f"Not a rational number: {text!r}") from e


class CouplingSet(NamedTuple):
    g: Fraction = Fraction(0)
    h: Fraction = Fraction(0)
    z: Fraction = Fraction(0)

    def __neg__(self) -> "CouplingSet":
        return CouplingSet(-self.g, -self.h, -self.z)


class AmendedCouplingSet(NamedTuple):
    gamma: Fraction = Fraction(0)
    delta: Fraction = Fraction(0)
    z: Fraction = Fraction(0)

    def __neg__(self) -> "AmendedCouplingSet":
        return AmendedCouplingSet(-self.gamma, -self.delta, -self.z)


def couplings(g=0, h=0, z=0) -> CouplingSet:
    return CouplingSet(parse_rational(g), parse_rational(h), parse_rational(z))


def amended(gamma=0, delta=0, z=0) -> AmendedCouplingSet:
    return AmendedCouplingSet(parse_rational(gamma), parse_rational(delta), parse_rational(z))


def to_physical(a: AmendedCouplingSet) -> CouplingSet:
    """
    g = gamma + delta, h = gamma - delta.

    >>> to_physical(amended("1/2", "1/4"))
    CouplingSet(g=Fraction(3, 4), h=Fraction(1, 4), z=Fraction(0, 1))
    >>> to_physical(amended(0, 0, 5)).z
    Fraction(5, 1)
    """
    return CouplingSet(a.gamma + a.delta, a.gamma - a.delta, a.z)


def to_amended(c: CouplingSet) -> AmendedCouplingSet:
    """
    gamma = (g + h)/2, delta = (g - h)/2.

    >>> to_amended(couplings(1, 1))
    AmendedCouplingSet(gamma=Fraction(1, 1), delta=Fraction(0, 1), z=Fraction(0, 1))
    >>> to_amended(couplings("3/4", "1/4"))
    AmendedCouplingSet(gamma=Fraction(1, 2), delta=Fraction(1, 4), z=Fraction(0, 1))
    """
    return AmendedCouplingSet((c.g + c.h) / 2, (c.g - c.h) / 2, c.z)


@dataclass(frozen=True)
class HamiltonianMatrix:
    n: int
    kind: str
    entries: tuple[tuple, ...]

    def __post_init__(self):
        assert self.kind in (RATIONAL, POLY, FLOAT)
        assert len(self.entries) == self.n
        assert all(len(row) == self.n for row in self.entries)

    def __getitem__(self, index: tuple[int, int]):
        i, j = index
        return self.entries[i][j]

    def transpose(self) -> "HamiltonianMatrix":
        return HamiltonianMatrix(self.n, self.kind, tuple(zip(*self.entries)))

    def trace(self):
        return sum((self.entries[i][i] for i in range(self.n)), start=self.entries[0][0] * 0)

    def to_float(self) -> np.ndarray:
        """
        Float projection: every exact entry rounded to the nearest double.
        """
        if self.kind == POLY:
            if any(not x.is_ground for row in self.entries for x in row):
                raise PolyError("Cannot project a symbolic matrix to floats")
            return np.array([[float(to_fraction(x.const())) for x in row] for row in self.entries])
        return np.array([[float(x) for x in row] for row in self.entries], dtype=float)

    def project(self) -> "HamiltonianMatrix":
        A = self.to_float()
        return HamiltonianMatrix(self.n, FLOAT, tuple(tuple(float(x) for x in row) for row in A))


def _coupling_values(c: CouplingSet | AmendedCouplingSet | None) -> dict:
    if c is None:
        return {NONE: R.zero, G: GAMMA + DELTA, H: GAMMA - DELTA, Z: ZVAR}
    if isinstance(c, AmendedCouplingSet):
        c = to_physical(c)
    return {NONE: Fraction(0), G: Fraction(c.g), H: Fraction(c.h), Z: Fraction(c.z)}


def assemble(
    spec: GraphFamilySpec, c: CouplingSet | AmendedCouplingSet | None = None
) -> HamiltonianMatrix:
    """
    Assemble H for the given couplings, or symbolically when c is None.

    >>> H3 = assemble(build_graph(3, 1))
    >>> [pretty(H3[2, 3]), pretty(H3[2, 4]), pretty(H3[3, 5])]
    ['-gamma - delta - 1', '-gamma + delta - 1', 'gamma - delta - 1']
    >>> H1 = assemble(build_graph(1, 1), couplings())
    >>> [[int(x) for x in row] for row in H1.entries]
    [[3, -1, -1, 0], [-1, 2, 0, -1], [-1, 0, 2, -1], [0, -1, -1, 3]]
    """
    values = _coupling_values(c)
    symbolic = c is None
    zero = R.zero if symbolic else Fraction(0)

    N = spec.N
    M = [[zero for _ in range(N)] for _ in range(N)]
    for i, w in enumerate(spec.weights):
        M[i][i] = zero + w
    for edge in spec.edges:
        a, b, coupling, sign = edge_indices(spec, edge)
        value = values[coupling]
        M[a][b] = -1 - sign * value
        M[b][a] = -1 + sign * value

    return HamiltonianMatrix(N, POLY if symbolic else RATIONAL, tuple(tuple(row) for row in M))


def kinetic(spec: GraphFamilySpec) -> HamiltonianMatrix:
    """
    The purely kinetic (Hermitian) Hamiltonian, g = h = z = 0.
    """
    return assemble(spec, CouplingSet())


#
# JSON documents
#


def _scalar_to_json(x, kind: str):
    if kind == RATIONAL:
        return rational_to_str(x)
    if kind == POLY:
        return poly_to_json(x)
    return float(x)


def _scalar_from_json(x, kind: str):
    if kind == RATIONAL:
        return parse_rational(x)
    if kind == POLY:
        return poly_from_json(x)
    return float(x)


def matrix_to_json(M: HamiltonianMatrix) -> dict:
    return {
        "n": M.n,
        "kind": M.kind,
        "entries": [[_scalar_to_json(x, M.kind) for x in row] for row in M.entries],
    }


def matrix_from_json(doc: dict) -> HamiltonianMatrix:
    try:
        n, kind = int(doc["n"]), doc["kind"]
        if kind not in (RATIONAL, POLY, FLOAT):
            raise ValueError(f"unknown kind {kind!r}")
        entries = tuple(tuple(_scalar_from_json(x, kind) for x in row) for row in doc["entries"])
        return HamiltonianMatrix(n, kind, entries)
    except (KeyError, TypeError, AssertionError) as e:
        raise PolyError(f"Malformed matrix document: {e}") from e


#
# Test functions
#


def _random_couplings(rng) -> CouplingSet:
    return CouplingSet(
        *(Fraction(rng.randint(-40, 40), rng.randint(1, 12)) for _ in range(3))
    )


def test_k3_matrices():
    from polyring import parse_poly

    g = GAMMA + DELTA
    h = GAMMA - DELTA
    z = ZVAR

    H3 = assemble(build_graph(3, 1))
    assert H3[0, 1] == -1 - z and H3[1, 0] == -1 + z
    assert H3[2, 3] == -1 - g and H3[2, 4] == -1 - h
    assert H3[3, 2] == -1 + g and H3[3, 5] == -1 + h
    assert H3[4, 2] == -1 + h and H3[4, 5] == -1 + g
    assert H3[5, 3] == -1 - h and H3[5, 4] == -1 - g
    assert H3[6, 7] == -1 + z and H3[7, 6] == -1 - z
    assert [H3[i, i] for i in range(8)] == [2, 2, 3, 2, 2, 3, 2, 2]
    assert H3[3, 4] == 0 and H3[0, 2] == 0

    H32 = assemble(build_graph(3, 2))
    assert H32.n == 10
    assert H32[2, 3] == -1 - g and H32[2, 5] == -1 - h
    assert H32[4, 7] == -1 + h and H32[5, 2] == -1 + h
    assert H32[6, 7] == -1 + g
    assert H32[7, 4] == -1 - h and H32[7, 6] == -1 - g
    assert H32[3, 4] == -1 and H32[5, 6] == -1
    assert H32[8, 9] == -1 + z and H32[9, 8] == -1 - z
    assert H32[0, 0] == parse_poly("2")


def test_transpose_identity():
    import random

    rng = random.Random(20240401)
    for _ in range(50):
        spec = build_graph(rng.randint(1, 8), rng.randint(1, 8))
        c = _random_couplings(rng)
        assert assemble(spec, c).transpose() == assemble(spec, -c)


def test_trace_and_symmetry():
    for K in range(1, 11):
        for L in range(1, 11):
            spec = build_graph(K, L)
            H0 = kinetic(spec)
            assert H0 == H0.transpose()
            assert H0.trace() == 2 * spec.N + 2
            assert assemble(spec).trace() == 2 * spec.N + 2


def test_sparsity():
    for K in range(1, 9):
        for L in range(1, 5):
            spec = build_graph(K, L)
            M = assemble(spec)
            counts = [sum(1 for j in range(M.n) if j != i and M[i, j] != 0) for i in range(M.n)]
            assert max(counts) <= 4
            if L == 1 and K >= 2:
                assert [i for i, c in enumerate(counts) if c == 3] == [K - 1, K + 2]


def test_coupling_round_trip():
    import random

    rng = random.Random(3)
    for _ in range(20):
        a = AmendedCouplingSet(*_random_couplings(rng))
        assert to_amended(to_physical(a)) == a
        c = _random_couplings(rng)
        assert to_physical(to_amended(c)) == c

    # amended and physical couplings assemble the same matrix
    spec = build_graph(2, 2)
    a = amended("1/3", "-2/5", "7/4")
    assert assemble(spec, a) == assemble(spec, to_physical(a))


def test_float_projection_and_json():
    spec = build_graph(2, 1)
    M = assemble(spec, amended("1/3", "1/7", "1/2"))
    A = M.to_float()
    assert A.shape == (6, 6)
    assert A[0, 1] == float(Fraction(-3, 2))
    assert M.project().kind == FLOAT

    for matrix in (M, assemble(spec), M.project()):
        assert matrix_from_json(matrix_to_json(matrix)) == matrix


def test_k1_kinetic_eigenvalues():
    A = kinetic(build_graph(1, 1)).to_float()
    eigenvalues = sorted(np.linalg.eigvalsh(A))
    expected = sorted([(5 - 17**0.5) / 2, 2, 3, (5 + 17**0.5) / 2])
    assert np.allclose(eigenvalues, expected, atol=1e-12)


if __name__ == "__main__":
    import doctest

    doctest.testmod()
    test_k3_matrices()
    test_transpose_identity()
    test_trace_and_symmetry()
    test_sparsity()
    test_coupling_round_trip()
    test_float_projection_and_json()
    test_k1_kinetic_eigenvalues()
    print("All tests OK")
