# Numeric spectra with residual certification
#
# Eigenvalues come from LAPACK (numpy.linalg.eigvals) on the float
# projection of the matrix. Each eigenvalue is then checked against the
# exact secular polynomial p of the matrix: the residual
#
#   |p(lambda)| / (1 + |lambda|)^N
#
# is evaluated exactly, in Fractions, at the binary value of lambda. An
# eigenvalue whose residual is above the tolerance is polished with Newton
# steps on p; if that does not bring it under the tolerance the spectrum is
# rejected with a CertificationError.
#
# For a real matrix LAPACK returns complex eigenvalues as exact conjugate
# pairs. Only the real eigenvalues and the upper half plane members of the
# pairs are polished, the lower half is rebuilt by conjugation, so the
# result is conjugate closed by construction.
#
# A spectrum is marginal when some |Im lambda| lies within a factor 100 of
# tol_imag on either side. The gap between levels plays no part, so the
# exact E=2 doublet at K=2 is not marginal.

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple
import sys

import numpy as np

from hamiltonian import FLOAT, AmendedCouplingSet, CouplingSet, HamiltonianMatrix, amended
from hamiltonian import assemble, couplings, kinetic, to_amended
from lattice import GraphFamilySpec, build_graph
from polyring import E, MultiPoly, PolyError, charpoly, coefficients_in, poly_eval, to_fraction
from secular import symbolic_charpoly


DEBUG = False

DEFAULT_TOL = 1e-10
MAX_NEWTON = 30


class CertificationError(ArithmeticError):
    def __init__(self, worst: float, tol: float):
        super().__init__(f"Eigenvalue residual {worst:.3e} exceeds tolerance {tol:.1e}")
        self.worst = worst
        self.tol = tol


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    residuals: np.ndarray
    tol_imag: float
    n_real: int
    n_complex_pairs: int
    all_real: bool
    marginal: bool
    max_imag: float

    @property
    def N(self) -> int:
        return len(self.eigenvalues)


def _exact_coefficients(p: MultiPoly) -> list[Fraction]:
    """
    Coefficients of a polynomial in E alone, highest power first.
    """
    coeffs = coefficients_in(p)
    if any(not c.is_ground for c in coeffs):
        raise PolyError("Secular polynomial must be numeric apart from E")
    return [to_fraction(c.const()) for c in reversed(coeffs)]


def _horner(coeffs: list[Fraction], lam: complex) -> tuple[complex, complex]:
    """
    p(lam) and p'(lam), computed exactly and rounded at the end.

    >>> _horner([Fraction(1), Fraction(0), Fraction(1)], 1j)
    (0j, 2j)
    """
    a, b = Fraction(lam.real), Fraction(lam.imag)
    pr = pi = dr = di = Fraction(0)
    for c in coeffs:
        dr, di = dr * a - di * b + pr, dr * b + di * a + pi
        pr, pi = pr * a - pi * b + c, pr * b + pi * a
    return complex(float(pr), float(pi)), complex(float(dr), float(di))


def _residual(value: complex, lam: complex, n: int) -> float:
    return abs(value) / (1 + abs(lam)) ** n


def _polish(coeffs: list[Fraction], lam: complex, tol: float, real: bool) -> tuple[complex, float]:
    n = len(coeffs) - 1
    value, slope = _horner(coeffs, lam)
    best, best_res = lam, _residual(value, lam, n)

    for _ in range(MAX_NEWTON):
        if best_res <= tol * 1e-3 or slope == 0:
            break
        step = value / slope
        candidate = best - (step.real if real else step)
        value, slope = _horner(coeffs, candidate)
        res = _residual(value, candidate, n)
        if res >= best_res:
            break
        best, best_res = candidate, res

    return best, best_res


def eigenvalues(
    M: HamiltonianMatrix, tol: float = DEFAULT_TOL, secular: MultiPoly | None = None
) -> Spectrum:
    """
    Certified eigenvalues of M.

    `secular` is the exact characteristic polynomial (in E only) to certify
    against. Without it, the polynomial is computed from M when M is exact,
    and taken from numpy.poly when M is a float matrix.

    >>> s = eigenvalues(kinetic(build_graph(1, 1)))
    >>> [round(float(x.real), 7) for x in s.eigenvalues], s.all_real
    ([0.4384472, 2.0, 3.0, 4.5615528], True)
    >>> s = eigenvalues(assemble(build_graph(1, 1), amended(0, "1/2")))
    >>> s.n_real, s.n_complex_pairs, s.all_real
    (2, 1, False)
    >>> [complex(round(x.real, 7), round(x.imag, 7)) for x in s.eigenvalues[1:3]]
    [(2.5-0.8660254j), (2.5+0.8660254j)]
    """
    if tol <= 0:
        raise ValueError(f"Tolerance must be positive, got {tol}")

    A = M.to_float()
    n = M.n
    if secular is None and M.kind != FLOAT:
        secular = charpoly(M)
    if secular is not None:
        coeffs = _exact_coefficients(secular)
    else:
        coeffs = [Fraction(float(c)) for c in np.poly(A)]
    if len(coeffs) != n + 1 or coeffs[0] != 1:
        raise PolyError(f"Secular polynomial is not monic of degree {n}")

    raw = np.linalg.eigvals(A)
    reals = [complex(x.real) for x in raw if x.imag == 0]
    uppers = [complex(x) for x in raw if x.imag > 0]
    assert len(reals) + 2 * len(uppers) == n

    values, residuals = [], []
    for lam in reals:
        lam, res = _polish(coeffs, lam, tol, real=True)
        values.append(lam)
        residuals.append(res)
    for lam in uppers:
        lam, res = _polish(coeffs, lam, tol, real=False)
        lam = complex(lam.real, abs(lam.imag))
        values += [lam, lam.conjugate()]
        residuals += [res, res]

    worst = max(residuals, default=0.0)
    if DEBUG:
        print(f"eigenvalues: N={n}, worst residual {worst:.2e}", file=sys.stderr)
    if worst > tol:
        raise CertificationError(worst, tol)

    order = sorted(range(n), key=lambda i: (values[i].real, values[i].imag))
    values = np.array([values[i] for i in order], dtype=complex)
    residuals = np.array([residuals[i] for i in order])

    tol_imag = max(tol * 100, 1e-8)
    imag = np.abs(values.imag)
    n_pairs = int(np.sum(imag > tol_imag)) // 2
    max_imag = float(imag.max()) if n else 0.0
    marginal = bool(np.any((imag >= tol_imag * 1e-2) & (imag <= tol_imag * 1e2)))

    return Spectrum(
        eigenvalues=values,
        residuals=residuals,
        tol_imag=tol_imag,
        n_real=n - 2 * n_pairs,
        n_complex_pairs=n_pairs,
        all_real=n_pairs == 0,
        marginal=marginal,
        max_imag=max_imag,
    )


class Reality(NamedTuple):
    all_real: bool
    max_imag: float
    marginal: bool


def point_spectrum(
    spec: GraphFamilySpec, a: AmendedCouplingSet | CouplingSet, tol: float = DEFAULT_TOL
) -> Spectrum:
    """
    Spectrum of H at one coupling point, certified against the cached
    symbolic secular polynomial of the graph.
    """
    if isinstance(a, CouplingSet):
        a = to_amended(a)
    p = poly_eval(symbolic_charpoly(spec), gamma=a.gamma, delta=a.delta, z=a.z)
    return eigenvalues(assemble(spec, a), tol, secular=p)


def classify_reality(
    spec: GraphFamilySpec, a: AmendedCouplingSet | CouplingSet, tol: float = DEFAULT_TOL
) -> Reality:
    """
    >>> classify_reality(build_graph(2, 1), amended(1, 0, 0)).all_real
    True
    >>> classify_reality(build_graph(2, 1), amended("1.2", 0, 0)).all_real
    False
    """
    s = point_spectrum(spec, a, tol)
    return Reality(s.all_real, s.max_imag, s.marginal)


def spectrum_to_json(s: Spectrum) -> dict:
    return {
        "eigenvalues": [{"re": float(x.real), "im": float(x.imag)} for x in s.eigenvalues],
        "residuals": [float(r) for r in s.residuals],
        "all_real": s.all_real,
        "marginal": s.marginal,
        "n_real": s.n_real,
        "n_complex_pairs": s.n_complex_pairs,
        "max_imag": s.max_imag,
        "tol_imag": s.tol_imag,
    }


#
# Test functions
#


def _deviation(a: np.ndarray, b: np.ndarray) -> float:
    remaining = list(b)
    worst = 0.0
    for x in a:
        i = int(np.argmin([abs(x - y) for y in remaining]))
        worst = max(worst, abs(x - remaining.pop(i)))
    return worst


def test_identity():
    from hamiltonian import RATIONAL

    one, zero = Fraction(1), Fraction(0)
    I3 = HamiltonianMatrix(3, RATIONAL, ((one, zero, zero), (zero, one, zero), (zero, zero, one)))
    s = eigenvalues(I3)
    assert list(s.eigenvalues) == [1, 1, 1]
    assert s.all_real and s.n_real == 3 and not s.marginal
    assert s.max_imag == 0


def test_k1_spectra():
    spec = build_graph(1, 1)
    s = eigenvalues(kinetic(spec))
    expected = [(5 - 17**0.5) / 2, 2, 3, (5 + 17**0.5) / 2]
    assert np.allclose(s.eigenvalues, expected, atol=1e-12)
    assert s.n_real == 4 and s.n_complex_pairs == 0

    s = point_spectrum(spec, amended(0, "1/2"))
    assert s.n_real + 2 * s.n_complex_pairs == s.N == 4
    assert abs(s.max_imag - 3**0.5 / 2) < 1e-12
    assert max(s.residuals) <= DEFAULT_TOL


def test_classify_reality():
    assert classify_reality(build_graph(3, 1), amended()).all_real
    assert classify_reality(build_graph(2, 1), amended(1, 0, 0)).all_real
    r = classify_reality(build_graph(2, 1), amended("1.2", 0, 0))
    assert not r.all_real and r.max_imag > 0.1
    # physical couplings are accepted too
    assert classify_reality(build_graph(2, 1), couplings(1, 1)).all_real


def test_trace_and_determinant():
    import random

    rng = random.Random(20240401)
    spec = build_graph(3, 1)
    for _ in range(10):
        a = amended(*(Fraction(rng.randint(-20, 20), 10) for _ in range(3)))
        s = point_spectrum(spec, a)
        assert abs(sum(s.eigenvalues) - (2 * spec.N + 2)) < 1e-8

        p = poly_eval(symbolic_charpoly(spec), gamma=a.gamma, delta=a.delta, z=a.z)
        c0 = float(poly_eval(p, E=0, gamma=0, delta=0, z=0))
        product = np.prod(s.eigenvalues)
        assert abs(product - (-1) ** spec.N * c0) <= 1e-6 * max(1.0, abs(c0))


def test_sign_flips():
    import random

    rng = random.Random(20240401)
    spec = build_graph(3, 1)
    used = 0
    for _ in range(50):
        g, d, z = (Fraction(rng.randint(-30, 30), 20) for _ in range(3))
        base = point_spectrum(spec, amended(g, d, z))

        # conjugate closure
        assert _deviation(base.eigenvalues, np.conj(base.eigenvalues)) < 1e-12

        gaps = np.abs(base.eigenvalues[:, None] - base.eigenvalues[None, :])
        if np.min(gaps + np.eye(spec.N) * 10) < 1e-3:
            continue
        used += 1
        for flipped in (amended(-g, d, z), amended(g, -d, z), amended(g, d, -z)):
            other = point_spectrum(spec, flipped)
            assert _deviation(base.eigenvalues, other.eigenvalues) < 1e-8
    assert used >= 40


def test_certification_failure():
    from hamiltonian import RATIONAL

    one, zero = Fraction(1), Fraction(0)
    I2 = HamiltonianMatrix(2, RATIONAL, ((one, zero), (zero, one)))
    try:
        eigenvalues(I2, secular=E**2 + 1)
    except CertificationError as e:
        assert e.worst >= 0.5
    else:
        raise AssertionError("wrong secular polynomial was certified")

    try:
        eigenvalues(I2, secular=E**3)
    except PolyError:
        pass
    else:
        raise AssertionError("degree mismatch accepted")


def test_doublet_is_not_marginal():
    s = eigenvalues(kinetic(build_graph(2, 1)))
    assert sum(1 for x in s.eigenvalues if abs(x - 2) < 1e-9) == 2
    assert s.all_real and not s.marginal

    s = point_spectrum(build_graph(2, 1), amended("1/3", "1/5", 0))
    assert s.all_real and not s.marginal


def test_float_matrix_and_json():
    M = assemble(build_graph(2, 1), amended("1/3", "1/5", "1/7")).project()
    s = eigenvalues(M)
    doc = spectrum_to_json(s)
    assert len(doc["eigenvalues"]) == 6
    assert abs(sum(x["re"] for x in doc["eigenvalues"]) - 14) < 1e-8
    assert set(doc) >= {"eigenvalues", "residuals", "all_real", "marginal"}


if __name__ == "__main__":
    import doctest

    if "-x" in sys.argv:
        sys.argv.remove("-x")
        DEBUG = True

    doctest.testmod()
    test_identity()
    test_k1_spectra()
    test_classify_reality()
    test_trace_and_determinant()
    test_sign_flips()
    test_certification_failure()
    test_doublet_is_not_marginal()
    test_float_matrix_and_json()
    print("All tests OK")
