# Parity split of the secular polynomial
#
# The loop graph is symmetric under the left/right reflection R of
# lattice.reflect, and with the sign rule of the couplings H commutes with
# the permutation matrix of R:
#
#   H[R(a), R(b)] = H[a, b]
#
# On the canonical ordering R(a) = N-1-a, so the first N/2 indices are one
# representative per reflection pair. In the basis
#
#   s_a = e_a + e_R(a),   t_a = e_a - e_R(a)     (a < N/2)
#
# H is block diagonal and the blocks are
#
#   plus[a, b]  = H[a, b] + H[a, R(b)]
#   minus[a, b] = H[a, b] - H[a, R(b)]
#
# The characteristic polynomials of the two blocks are the two factors of
# the secular polynomial. At L=1 the symmetric block is a path, the loop
# enters it only through the product (2 + 2 gamma)(2 - 2 gamma), and the
# antisymmetric block only through (2 delta)(-2 delta). So the factors
# separate into a gamma-only and a delta-only polynomial for every K. At
# L >= 2 the loop survives inside both blocks as a cycle, and g*h terms
# mix gamma and delta into both factors.

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
import random
import sys
import time

import numpy as np
from sympy.polys.domains import QQ

from hamiltonian import RATIONAL, AmendedCouplingSet, HamiltonianMatrix, amended, assemble
from lattice import GraphFamilySpec, build_graph, canonical_index, reflect
from polyring import DELTA, E, GAMMA, R, Z, MultiPoly, charpoly, depends_on, float_coefficients
from polyring import poly_eval, poly_to_json, pretty


DEBUG = False

SEED = 20240401


class BlockStructureError(ArithmeticError):
    def __init__(self, entries: list[tuple[int, int, MultiPoly]]):
        shown = ", ".join(f"[{i}, {j}] = {pretty(x)}" for i, j, x in entries[:4])
        super().__init__(f"Reflection basis leaves {len(entries)} off-block entries: {shown}")
        self.entries = entries


@dataclass(frozen=True)
class SecularSplit:
    K: int
    L: int
    f_plus: MultiPoly
    f_minus: MultiPoly
    verified_separation: bool

    @property
    def product(self) -> MultiPoly:
        return self.f_plus * self.f_minus


def _mirror(spec: GraphFamilySpec) -> list[int]:
    return [canonical_index(spec, reflect(spec, node)) for node in spec.nodes]


def parity_basis(spec: GraphFamilySpec) -> HamiltonianMatrix:
    """
    Change of basis to reflection-symmetric and antisymmetric pair vectors.

    Column c < N/2 is e_c + e_R(c), column N/2 + c is e_c - e_R(c).

    >>> B = parity_basis(build_graph(1, 1))
    >>> [[int(x) for x in row] for row in B.entries]
    [[1, 0, 1, 0], [0, 1, 0, 1], [0, 1, 0, -1], [1, 0, -1, 0]]
    """
    N = spec.N
    half = N // 2
    mirror = _mirror(spec)
    assert mirror == [N - 1 - a for a in range(N)]

    B = [[Fraction(0)] * N for _ in range(N)]
    for a in range(half):
        B[a][a] += 1
        B[mirror[a]][a] += 1
        B[a][half + a] += 1
        B[mirror[a]][half + a] -= 1
    return HamiltonianMatrix(N, RATIONAL, tuple(tuple(row) for row in B))


def transform(H: HamiltonianMatrix, B: HamiltonianMatrix) -> list[list]:
    """
    H' = B^-1 H B with B^-1 = B^T / 2. Every column of B has exactly two
    nonzero entries, so both products are done column pair by column pair.
    """
    n = H.n
    pairs = []
    for c in range(n):
        pairs.append([(i, B[i, c]) for i in range(n) if B[i, c] != 0])
        assert len(pairs[c]) == 2

    HB = [[R.zero] * n for _ in range(n)]
    for i in range(n):
        for c in range(n):
            HB[i][c] = sum((H[i, j] * int(b) for j, b in pairs[c]), R.zero)

    out = [[R.zero] * n for _ in range(n)]
    for r in range(n):
        for c in range(n):
            out[r][c] = sum((HB[i][c] * int(b) for i, b in pairs[r]), R.zero) * QQ(1, 2)
    return out


def blocks(spec: GraphFamilySpec) -> tuple[list[list], list[list]]:
    """
    The symmetric and antisymmetric diagonal blocks of the symbolic H.

    Raises BlockStructureError if the off-diagonal blocks do not vanish.
    """
    H = assemble(spec)
    Hp = transform(H, parity_basis(spec))
    half = spec.N // 2

    offending = []
    for r in range(spec.N):
        for c in range(spec.N):
            if (r < half) != (c < half) and Hp[r][c]:
                offending.append((r, c, Hp[r][c]))
    if offending:
        raise BlockStructureError(offending)

    sym = [row[:half] for row in Hp[:half]]
    anti = [row[half:] for row in Hp[half:]]
    return sym, anti


@lru_cache(maxsize=None)
def split_secular(spec: GraphFamilySpec) -> SecularSplit:
    """
    Factor the secular polynomial of the symbolic H into its two parity
    sectors. The factor that depends on gamma is f_plus.

    >>> s = split_secular(build_graph(1, 1))
    >>> pretty(s.f_plus), pretty(s.f_minus), s.verified_separation
    ('E^2 - 5*E + 4*gamma^2 + 2', 'E^2 - 5*E + 4*delta^2 + 6', True)
    """
    start = time.time()
    sym, anti = blocks(spec)
    f_sym, f_anti = charpoly(sym), charpoly(anti)

    if depends_on(f_anti, GAMMA) and not depends_on(f_sym, GAMMA):
        f_plus, f_minus = f_anti, f_sym
    else:
        f_plus, f_minus = f_sym, f_anti

    separated = not depends_on(f_plus, DELTA) and not depends_on(f_minus, GAMMA)

    if DEBUG:
        print(
            f"split K={spec.K} L={spec.L}: {len(f_plus)}+{len(f_minus)} terms, "
            f"separated={separated}, {time.time() - start:.2f}s",
            file=sys.stderr,
        )

    return SecularSplit(spec.K, spec.L, f_plus, f_minus, separated)


def symbolic_charpoly(spec: GraphFamilySpec) -> MultiPoly:
    """
    charpoly(H) over QQ[E, gamma, delta, z], as the product of the two
    block characteristic polynomials.
    """
    return split_secular(spec).product


#
# Separation identity
#


@dataclass(frozen=True)
class SeparationReport:
    K: int
    L: int
    mode: str
    passed: bool
    trials: int = 0
    counterexample: dict | None = None


# small points tried when a symbolic failure needs a concrete witness
_WITNESS_POINTS = [
    (Fraction(g), Fraction(d), Fraction(z))
    for g in (1, 2, Fraction(1, 2))
    for d in (1, 3, Fraction(1, 3))
    for z in (0, 1)
]


def _identity_sides(P: MultiPoly) -> tuple[MultiPoly, MultiPoly]:
    P00 = P.subs(GAMMA, 0).subs(DELTA, 0)
    Pg0 = P.subs(DELTA, 0)
    P0d = P.subs(GAMMA, 0)
    return P * P00, Pg0 * P0d


def _point_sides(spec: GraphFamilySpec, g: Fraction, d: Fraction, z: Fraction):
    def at(gamma, delta):
        return charpoly(assemble(spec, amended(gamma, delta, z)))

    return at(g, d) * at(0, 0), at(g, 0) * at(0, d)


def _witness(gamma, delta, z, lhs: MultiPoly, rhs: MultiPoly) -> dict:
    return {
        "gamma": str(gamma),
        "delta": str(delta),
        "z": str(z),
        "difference": pretty(lhs - rhs),
    }


def separation_identity_check(
    spec: GraphFamilySpec, trials: int = 0, seed: int = SEED
) -> SeparationReport:
    """
    Check charpoly(g, d, z) * charpoly(0, 0, z) = charpoly(g, 0, z) * charpoly(0, d, z)
    as polynomials in E.

    With trials=0 the identity is checked symbolically in gamma, delta and z.
    Otherwise it is checked at `trials` random rational points, with each
    charpoly computed from the full matrix.

    >>> separation_identity_check(build_graph(3, 1)).passed
    True
    >>> separation_identity_check(build_graph(1, 2)).passed
    False
    """
    if trials <= 0:
        lhs, rhs = _identity_sides(symbolic_charpoly(spec))
        if lhs == rhs:
            return SeparationReport(spec.K, spec.L, "symbolic", True)
        counterexample = None
        for g, d, z in _WITNESS_POINTS:
            values = {"gamma": g, "delta": d, "z": z}
            left, right = poly_eval(lhs, **values), poly_eval(rhs, **values)
            if left != right:
                counterexample = _witness(g, d, z, left, right)
                break
        return SeparationReport(spec.K, spec.L, "symbolic", False, 0, counterexample)

    rng = random.Random(seed)
    for t in range(trials):
        g, d, z = (Fraction(rng.randint(-40, 40), rng.randint(1, 20)) for _ in range(3))
        lhs, rhs = _point_sides(spec, g, d, z)
        if DEBUG:
            print(f"trial {t}: gamma={g} delta={d} z={z}", file=sys.stderr)
        if lhs != rhs:
            return SeparationReport(spec.K, spec.L, "trials", False, t + 1, _witness(g, d, z, lhs, rhs))
    return SeparationReport(spec.K, spec.L, "trials", True, trials)


#
# Numbers
#


def sector_roots(split: SecularSplit, a: AmendedCouplingSet) -> tuple[np.ndarray, np.ndarray]:
    """
    Numeric roots of f_plus and of f_minus at the given couplings.

    >>> plus, minus = sector_roots(split_secular(build_graph(1, 1)), amended())
    >>> [round(float(x.real), 7) for x in plus], [round(float(x.real), 7) for x in minus]
    ([0.4384472, 4.5615528], [2.0, 3.0])
    """
    out = []
    for f in (split.f_plus, split.f_minus):
        p = poly_eval(f, gamma=a.gamma, delta=a.delta, z=a.z)
        roots = np.roots(float_coefficients(p)).astype(complex)
        out.append(np.sort_complex(roots))
    return out[0], out[1]


def split_to_json(split: SecularSplit, matches_paper: bool | None = None) -> dict:
    return {
        "K": split.K,
        "L": split.L,
        "f_plus": poly_to_json(split.f_plus),
        "f_minus": poly_to_json(split.f_minus),
        "separated": split.verified_separation,
        "matches_paper": matches_paper,
    }


#
# Test functions
#


def test_parity_basis():
    for K in range(1, 6):
        for L in range(1, 4):
            B = parity_basis(build_graph(K, L))
            n = B.n
            for i in range(n):
                for j in range(n):
                    dot = sum(B[k, i] * B[k, j] for k in range(n))
                    assert dot == (2 if i == j else 0)

    # K=3, L=2: column of A_1 pairs it with B_2
    spec = build_graph(3, 2)
    B = parity_basis(spec)
    a1, b2 = 3, 6
    assert spec.labels()[a1] == "U1" and spec.labels()[b2] == "D2"
    assert B[a1, a1] == 1 and B[b2, a1] == 1
    assert B[a1, 5 + a1] == 1 and B[b2, 5 + a1] == -1


def test_k1_and_k2_factors():
    s = split_secular(build_graph(1, 1))
    assert s.f_plus == E**2 - 5 * E + 2 + 4 * GAMMA**2
    assert s.f_minus == E**2 - 5 * E + 6 + 4 * DELTA**2

    # z has no wedge to act on at K=1
    assert not depends_on(s.product, Z)

    s = split_secular(build_graph(2, 1))
    assert s.verified_separation
    assert poly_eval(s.f_plus, z=0) == (E - 2) * (E**2 - 5 * E + 1 + 4 * GAMMA**2)
    assert poly_eval(s.f_minus, z=0) == (E - 2) * (E**2 - 5 * E + 5 + 4 * DELTA**2)


def test_k3_factors():
    s = split_secular(build_graph(3, 1))
    P = Z**2 + 24 + 4 * GAMMA**2
    Q = -5 * Z**2 - 19 - 16 * GAMMA**2
    Rc = 2 * Z**2 + 4 * GAMMA**2 * Z**2 + 12 * GAMMA**2 + 2
    assert s.f_plus == E**4 - 9 * E**3 + P * E**2 + Q * E + Rc

    P = 28 + Z**2 + 4 * DELTA**2
    Q = -35 - 5 * Z**2 - 16 * DELTA**2
    Rc = 14 + 6 * Z**2 + 12 * DELTA**2 + 4 * DELTA**2 * Z**2
    assert s.f_minus == E**4 - 9 * E**3 + P * E**2 + Q * E + Rc


def test_full_charpoly_matches_split():
    for K, L in ((1, 1), (2, 1), (3, 1), (1, 2), (2, 2)):
        spec = build_graph(K, L)
        assert charpoly(assemble(spec)) == symbolic_charpoly(spec), (K, L)


def test_structure_for_all_small_graphs():
    from polyring import coefficients_in, is_even_in

    for K in range(1, 9):
        for L in range(1, 4):
            spec = build_graph(K, L)
            s = split_secular(spec)
            half = spec.N // 2

            for f in (s.f_plus, s.f_minus):
                coeffs = coefficients_in(f)
                assert len(coeffs) == half + 1 and coeffs[half] == 1
                assert is_even_in(f, Z)
            top = coefficients_in(s.f_plus)[half - 1] + coefficients_in(s.f_minus)[half - 1]
            assert top == -(2 * spec.N + 2)

            if L == 1:
                assert s.verified_separation, K
                assert is_even_in(s.f_plus, GAMMA) and is_even_in(s.f_minus, DELTA)

    assert not split_secular(build_graph(1, 2)).verified_separation


def test_even_k_constant_level():
    from polyring import poly_divide_exact

    for K in (2, 4, 6, 8):
        s = split_secular(build_graph(K, 1))
        poly_divide_exact(s.f_plus, E - 2)
        poly_divide_exact(s.f_minus, E - 2)


def test_separation_identity():
    assert separation_identity_check(build_graph(3, 1)).passed
    report = separation_identity_check(build_graph(7, 1), trials=3)
    assert report.passed and report.mode == "trials" and report.trials == 3

    # the loop mixes gamma and delta once it is longer than two nodes
    report = separation_identity_check(build_graph(1, 2))
    assert not report.passed and report.counterexample is not None
    assert report.counterexample["difference"] != "0"
    report = separation_identity_check(build_graph(1, 2), trials=3)
    assert not report.passed and report.counterexample is not None


def test_sector_roots_cover_spectrum():
    spec = build_graph(3, 1)
    a = amended("1/5", "1/7", "1/3")
    plus, minus = sector_roots(split_secular(spec), a)
    full = np.sort_complex(np.linalg.eigvals(assemble(spec, a).to_float()))
    union = np.sort_complex(np.concatenate([plus, minus]))
    assert np.allclose(union, full, atol=1e-8)


if __name__ == "__main__":
    import doctest

    if "-x" in sys.argv:
        sys.argv.remove("-x")
        DEBUG = True

    doctest.testmod()
    test_parity_basis()
    test_k1_and_k2_factors()
    test_k3_factors()
    test_full_charpoly_matches_split()
    test_structure_for_all_small_graphs()
    test_even_k_constant_level()
    test_separation_identity()
    test_sector_roots_cover_spectrum()
    print("All tests OK")
