# Exact polynomial arithmetic in E, gamma, delta, z
#
# Polynomials are elements of the sparse ring QQ[E, gamma, delta, z] from
# sympy.polys.rings. A PolyElement is a dict from exponent tuples
# (eE, egamma, edelta, ez) to nonzero rational coefficients, which is
# exactly the representation we want, so we use it directly instead of
# wrapping it.
#
# Scalars that enter from the outside world (couplings, matrix entries of
# rational matrices) are fractions.Fraction. They are converted into ring
# constants at the boundary with `to_qq`.
#
# Characteristic polynomials are computed with the Faddeev-LeVerrier
# recursion
#
#   M_0 = 0,  c_N = 1
#   M_k = A M_{k-1} + c_{N-k+1} I
#   c_{N-k} = -trace(A M_k) / k
#
# which only divides by the integers 1..N and therefore stays exact over
# QQ[gamma, delta, z]. The Hamiltonians have at most five nonzero entries
# per row, so A is kept as sparse rows and A M is cheap.

from fractions import Fraction
import sys

import numpy as np
from sympy.parsing.sympy_parser import parse_expr
from sympy.polys.domains import QQ
from sympy.polys.rings import PolyElement, ring


DEBUG = False

R, E, GAMMA, DELTA, Z = ring("E,gamma,delta,z", QQ)

MultiPoly = PolyElement

VARIABLES = (E, GAMMA, DELTA, Z)
NAMES = ("E", "gamma", "delta", "z")


class PolyError(ValueError):
    pass


class NotDivisibleError(PolyError):
    def __init__(self, remainder: MultiPoly):
        super().__init__(f"Division leaves remainder {pretty(remainder)}")
        self.remainder = remainder


def to_qq(x: Fraction | int | str):
    """
    Convert an exact scalar into the coefficient domain.

    >>> to_qq(Fraction(3, 4)) == QQ(3, 4)
    True
    >>> to_qq("0.25") == QQ(1, 4)
    True
    """
    if isinstance(x, str):
        x = Fraction(x)
    if isinstance(x, float):
        raise PolyError(f"Refusing inexact scalar {x!r}")
    x = Fraction(x)
    return QQ(x.numerator, x.denominator)


def to_fraction(c) -> Fraction:
    return Fraction(int(c.numerator), int(c.denominator))


def const(x: Fraction | int) -> MultiPoly:
    return R.ground_new(to_qq(x))


def parse_poly(text: str) -> MultiPoly:
    """
    Parse a polynomial written with the names E, gamma, delta and z.

    >>> parse_poly("z**2 + 24 + 4*gamma**2") == Z**2 + 24 + 4 * GAMMA**2
    True
    """
    local_dict = dict(zip(NAMES, R.symbols))
    return R.from_expr(parse_expr(text, local_dict=local_dict))


#
# Characteristic polynomial
#


def _scalar_rows(M) -> list[list]:
    if hasattr(M, "entries"):
        if getattr(M, "kind", None) == "float":
            raise PolyError("Characteristic polynomials need an exact matrix")
        M = M.entries
    rows = [list(row) for row in M]
    n = len(rows)
    if any(len(row) != n for row in rows):
        raise PolyError(f"Matrix must be square, got {n} rows of lengths {[len(r) for r in rows]}")
    return rows


def _as_poly(x) -> MultiPoly:
    if isinstance(x, PolyElement):
        return x
    return const(x)


def charpoly(M) -> MultiPoly:
    """
    Exact characteristic polynomial det(E*I - M).

    M is a HamiltonianMatrix of kind "rational" or "poly", or a plain list of
    rows holding Fractions, ints or ring elements.

    >>> pretty(charpoly([[1, 0], [0, 1]]))
    'E^2 - 2*E + 1'
    >>> pretty(charpoly([[3, -1, -1, 0], [-1, 2, 0, -1], [-1, 0, 2, -1], [0, -1, -1, 3]]))
    'E^4 - 10*E^3 + 33*E^2 - 40*E + 12'
    """
    rows = _scalar_rows(M)
    n = len(rows)

    sparse = []
    for row in rows:
        sparse.append([(j, _as_poly(x)) for j, x in enumerate(row) if x != 0])

    coeffs = [R.zero] * (n + 1)
    coeffs[n] = R.one

    Mk = [[R.zero] * n for _ in range(n)]
    c = R.one

    for k in range(1, n + 1):
        # M_k = A M_{k-1} + c I
        AM = [[R.zero] * n for _ in range(n)]
        for i, row in enumerate(sparse):
            out = AM[i]
            for j, a in row:
                Mj = Mk[j]
                for col in range(n):
                    m = Mj[col]
                    if m:
                        out[col] += a * m
        for i in range(n):
            AM[i][i] += c
        Mk = AM

        trace = R.zero
        for i, row in enumerate(sparse):
            for j, a in row:
                m = Mk[j][i]
                if m:
                    trace += a * m
        c = -trace * QQ(1, k)
        coeffs[n - k] = c

        if DEBUG:
            print(f"charpoly: step {k}/{n}, {len(c)} terms", file=sys.stderr)

    return sum((coeffs[j] * E**j for j in range(n + 1)), R.zero)


#
# Evaluation and division
#


def poly_eval(
    p: MultiPoly,
    E: Fraction | None = None,
    gamma: Fraction | None = None,
    delta: Fraction | None = None,
    z: Fraction | None = None,
) -> MultiPoly | Fraction:
    """
    Substitute exact values for some or all variables.

    A full substitution returns a Fraction, a partial one a polynomial.

    >>> plus = parse_poly("E**4 - 9*E**3 + (z**2 + 24 + 4*gamma**2)*E**2 "
    ...                   "+ (-5*z**2 - 19 - 16*gamma**2)*E + 2*z**2 + 4*gamma**2*z**2 + 12*gamma**2 + 2")
    >>> pretty(poly_eval(plus, z=0, gamma=0))
    'E^4 - 9*E^3 + 24*E^2 - 19*E + 2'
    >>> poly_eval(plus, E=2, gamma=0, delta=0, z=0)
    Fraction(4, 1)
    >>> poly_eval(plus) == plus
    True
    """
    values = (E, gamma, delta, z)
    for var, value in zip(VARIABLES, values):
        if value is not None:
            p = p.subs(var, to_qq(value))
    if all(value is not None for value in values):
        return to_fraction(p.const())
    return p


def _is_monic_in_E(p: MultiPoly) -> bool:
    d = p.degree(E)
    if d < 0:
        return False
    lead = {m: c for m, c in p.items() if m[0] == d}
    return lead == {(d, 0, 0, 0): QQ.one}


def poly_divide_exact(num: MultiPoly, den: MultiPoly) -> MultiPoly:
    """
    Quotient of num by a divisor that is monic in E.

    The ring uses lex order with E first, so the leading term of a divisor
    that is monic in E is E^d, and the multivariate division algorithm
    reduces to long division in E over QQ[gamma, delta, z].

    >>> pretty(poly_divide_exact((E - 2)**2 * (E**2 - 5*E + 2), E - 2))
    'E^3 - 7*E^2 + 12*E - 4'
    >>> poly_divide_exact(E**2 + 1, E - 1)  # doctest: +IGNORE_EXCEPTION_DETAIL
    Traceback (most recent call last):
    ...
    NotDivisibleError: Division leaves remainder 2
    """
    if not _is_monic_in_E(den):
        raise PolyError(f"Divisor {pretty(den)} is not monic in E")
    q, r = num.div(den)
    if r:
        raise NotDivisibleError(r)
    return q


#
# Inspection
#


def depends_on(p: MultiPoly, var: MultiPoly) -> bool:
    i = R.index(var)
    return any(m[i] for m in p.keys())


def is_even_in(p: MultiPoly, var: MultiPoly) -> bool:
    i = R.index(var)
    return all(m[i] % 2 == 0 for m in p.keys())


def coefficients_in(p: MultiPoly, var: MultiPoly = E) -> list[MultiPoly]:
    """
    Coefficients of p as a polynomial in `var`, lowest power first.

    >>> [pretty(c) for c in coefficients_in(E**2 + GAMMA * E + 3)]
    ['3', 'gamma', '1']
    """
    i = R.index(var)
    d = p.degree(var)
    if d < 0:
        return []
    out = [R.zero for _ in range(d + 1)]
    for m, c in p.items():
        stripped = m[:i] + (0,) + m[i + 1 :]
        out[m[i]] += R.term_new(stripped, c)
    return out


def float_coefficients(p: MultiPoly) -> np.ndarray:
    """
    Float coefficients of a polynomial in E alone, highest power first
    (the numpy.polyval order).
    """
    if any(m[1:] != (0, 0, 0) for m in p.keys()):
        raise PolyError("Expected a polynomial in E only")
    d = max(p.degree(E), 0)
    out = np.zeros(d + 1)
    for m, c in p.items():
        out[d - m[0]] = float(to_fraction(c))
    return out


#
# Printing and JSON
#


def _order_key(monom: tuple[int, ...]) -> tuple:
    # descending E power, then descending (gamma, delta, z) exponents
    return tuple(-e for e in monom)


def _format_coeff(c: Fraction) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


def pretty(p: MultiPoly) -> str:
    """
    Stable human readable form, used for golden comparisons.

    >>> pretty(4 * GAMMA**2 * Z**2 - E**3 + Z**2 + QQ(1, 2))
    '-E^3 + 4*gamma^2*z^2 + z^2 + 1/2'
    >>> pretty(R.zero)
    '0'
    """
    if not p:
        return "0"
    parts = []
    for monom in sorted(p.keys(), key=_order_key):
        c = to_fraction(p[monom])
        factors = []
        for name, e in zip(NAMES, monom):
            if e == 1:
                factors.append(name)
            elif e > 1:
                factors.append(f"{name}^{e}")
        sign = "-" if c < 0 else "+"
        c = abs(c)
        if not factors:
            body = _format_coeff(c)
        elif c == 1:
            body = "*".join(factors)
        else:
            body = "*".join([_format_coeff(c)] + factors)
        parts.append((sign, body))

    sign, body = parts[0]
    out = ("-" if sign == "-" else "") + body
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


def rational_to_str(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def poly_to_json(p: MultiPoly) -> list[dict]:
    return [
        {"exponents": list(monom), "coeff": rational_to_str(to_fraction(p[monom]))}
        for monom in sorted(p.keys(), key=_order_key)
    ]


def poly_from_json(doc: list[dict]) -> MultiPoly:
    try:
        terms = {tuple(int(e) for e in t["exponents"]): to_qq(t["coeff"]) for t in doc}
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as e:
        raise PolyError(f"Malformed polynomial document: {e}") from e
    if any(len(m) != 4 or min(m) < 0 for m in terms):
        raise PolyError("Exponent vectors must have four nonnegative entries")
    return R.from_dict({m: c for m, c in terms.items() if c})


#
# Test functions
#


def _random_poly(rng, terms: int = 6) -> MultiPoly:
    p = R.zero
    for _ in range(terms):
        monom = tuple(rng.randint(0, 2) for _ in range(4))
        p += R.term_new(monom, QQ(rng.randint(-9, 9), rng.randint(1, 5)))
    return p


def test_ring_axioms():
    import random

    rng = random.Random(20240401)
    for _ in range(25):
        p, q, r = (_random_poly(rng) for _ in range(3))
        assert p * q == q * p
        assert (p * q) * r == p * (q * r)
        assert p * (q + r) == p * q + p * r

        point = {
            name: Fraction(rng.randint(-20, 20), rng.randint(1, 7))
            for name in NAMES
        }
        assert poly_eval(p * q, **point) == poly_eval(p, **point) * poly_eval(q, **point)
        assert poly_eval(p + q, **point) == poly_eval(p, **point) + poly_eval(q, **point)


def test_charpoly_small():
    assert charpoly([[1, 0], [0, 1]]) == (E - 1) ** 2
    assert charpoly([[Fraction(1, 2)]]) == E - QQ(1, 2)

    # the K=1 kinetic loop factors into its two parity sectors
    loop = [[3, -1, -1, 0], [-1, 2, 0, -1], [-1, 0, 2, -1], [0, -1, -1, 3]]
    assert charpoly(loop) == (E**2 - 5 * E + 2) * (E**2 - 5 * E + 6)

    # symbolic 2x2 block of the K=1 loop
    block = [[R(3), -2 - 2 * GAMMA], [-2 + 2 * GAMMA, R(2)]]
    assert charpoly(block) == E**2 - 5 * E + 2 + 4 * GAMMA**2


def test_charpoly_trace_and_transpose():
    import random

    rng = random.Random(7)
    for n in (3, 5, 6):
        M = [[Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(n)] for _ in range(n)]
        p = charpoly(M)
        coeffs = coefficients_in(p)
        assert coeffs[n] == 1
        trace = sum(M[i][i] for i in range(n))
        assert coeffs[n - 1] == const(-trace)
        transposed = [list(col) for col in zip(*M)]
        assert charpoly(transposed) == p


def test_charpoly_rejects_non_square():
    try:
        charpoly([[1, 2, 3], [4, 5, 6]])
    except PolyError:
        pass
    else:
        raise AssertionError("non-square matrix accepted")


def test_divide_exact():
    num = (E - 2) ** 2 * (E**2 - 5 * E + 2)
    assert poly_divide_exact(num, E - 2) == (E - 2) * (E**2 - 5 * E + 2)

    # the divisor may carry parameters below its leading E power
    den = E**2 - 5 * E + 2 + 4 * GAMMA**2
    other = E**2 - 5 * E + 6 + 4 * DELTA**2 * Z
    assert poly_divide_exact(den * other, den) == other

    try:
        poly_divide_exact(E**2 + 1, E - 1)
    except NotDivisibleError as e:
        assert e.remainder == 2
    else:
        raise AssertionError("expected a remainder")

    try:
        poly_divide_exact(E**2, 2 * E - 1)
    except NotDivisibleError:
        raise AssertionError("non-monic divisor must be rejected before dividing")
    except PolyError:
        pass

    try:
        poly_divide_exact(E**2, GAMMA * E + 1)
    except NotDivisibleError:
        raise AssertionError("non-monic divisor must be rejected before dividing")
    except PolyError:
        pass


def test_inspection_and_json():
    p = E**4 - 9 * E**3 + (Z**2 + 24 + 4 * GAMMA**2) * E**2 + QQ(-3, 7) * DELTA
    assert depends_on(p, GAMMA) and depends_on(p, DELTA) and depends_on(p, Z)
    assert is_even_in(p, GAMMA) and not is_even_in(p, DELTA)
    assert poly_from_json(poly_to_json(p)) == p
    assert poly_to_json(E - QQ(1, 2))[1] == {"exponents": [0, 0, 0, 0], "coeff": "-1/2"}
    assert list(float_coefficients(E**2 - 5 * E + 6)) == [1.0, -5.0, 6.0]


if __name__ == "__main__":
    import doctest

    if "-x" in sys.argv:
        sys.argv.remove("-x")
        DEBUG = True

    doctest.testmod()
    test_ring_axioms()
    test_charpoly_small()
    test_charpoly_trace_and_transpose()
    test_charpoly_rejects_non_square()
    test_divide_exact()
    test_inspection_and_json()
    print("All tests OK")
