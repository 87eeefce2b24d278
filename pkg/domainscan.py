# Reality domains in (gamma, delta, z)
#
# Two tools: a grid scan that classifies every point of a box as having an
# all-real spectrum or not (the raw material of a phase diagram), and a
# bisection that pins down where the spectrum stops being real along one
# axis.
#
# Near an exceptional point two levels meet and leave the real axis with an
# imaginary part that grows like the square root of the distance. Within
# about 1e-12 of the point the float eigensolver cannot tell the two sides
# apart; such points come back flagged as marginal. The bisection steps
# around a marginal midpoint by trying the quarter points instead.

from dataclasses import dataclass
from fractions import Fraction
from functools import partial
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, NamedTuple
import sys

import numpy as np

from hamiltonian import AmendedCouplingSet, amended, parse_rational
from lattice import GraphFamilySpec, build_graph
from secular import sector_roots, split_secular
from spectra import DEFAULT_TOL, Reality, classify_reality


DEBUG = False

BOUNDARY_TOL = 1e-8
MAX_BISECTIONS = 200

AXES = ("gamma", "delta", "z")


class BracketError(ValueError):
    pass


class Axis(NamedTuple):
    name: str
    lo: Fraction
    hi: Fraction
    count: int

    def values(self) -> list[Fraction]:
        if self.count == 1:
            return [self.lo]
        step = (self.hi - self.lo) / (self.count - 1)
        return [self.lo + i * step for i in range(self.count)]


def parse_axes(text: str) -> dict[str, Axis]:
    """
    Parse "gamma=-1.5:1.5:101;delta=-0.5:0.5:101".

    >>> axes = parse_axes("gamma=-1.5:1.5:101; delta=-1/2:1/2:3")
    >>> axes["delta"].values()
    [Fraction(-1, 2), Fraction(0, 1), Fraction(1, 2)]
    >>> axes["gamma"].count
    101
    """
    axes = {}
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        try:
            name, rng = part.split("=")
            lo, hi, count = rng.split(":")
            axis = Axis(name.strip(), parse_rational(lo), parse_rational(hi), int(count))
        except ValueError as e:
            raise BracketError(f"Malformed axis {part!r}, expected name=lo:hi:count") from e
        if axis.name not in AXES:
            raise BracketError(f"Unknown axis {axis.name!r}, expected one of {AXES}")
        if axis.name in axes:
            raise BracketError(f"Axis {axis.name!r} given twice")
        if axis.count < 1 or (axis.count == 1 and axis.lo != axis.hi):
            raise BracketError(f"Axis {axis.name!r} needs at least two points")
        axes[axis.name] = axis
    if not axes:
        raise BracketError("No axes given")
    return axes


class ScanRecord(NamedTuple):
    gamma: Fraction
    delta: Fraction
    z: Fraction
    all_real: bool
    max_imag: float
    marginal: bool


@dataclass(frozen=True)
class ScanGrid:
    K: int
    L: int
    axes: tuple[Axis, ...]
    fixed: dict
    records: tuple[ScanRecord, ...]

    def __post_init__(self):
        assert len(self.records) == int(np.prod([a.count for a in self.axes]))


def _scan_point(spec: GraphFamilySpec, tol: float, a: AmendedCouplingSet) -> ScanRecord:
    try:
        r = classify_reality(spec, a, tol)
    except (ArithmeticError, np.linalg.LinAlgError) as e:
        if DEBUG:
            print(f"scan: {a} failed: {e}", file=sys.stderr)
        return ScanRecord(a.gamma, a.delta, a.z, False, float("nan"), True)
    return ScanRecord(a.gamma, a.delta, a.z, r.all_real, r.max_imag, r.marginal)


def scan(
    spec: GraphFamilySpec,
    axes: dict[str, Axis],
    fixed: dict | None = None,
    tol: float = DEFAULT_TOL,
    jobs: int = 1,
) -> ScanGrid:
    """
    Classify every point of the grid spanned by `axes`; parameters without
    an axis take their value from `fixed` (default 0).

    Records are in row-major order over gamma, delta, z.

    >>> grid = scan(build_graph(1, 1), parse_axes("delta=0:3/5:3"))
    >>> [(str(r.delta), r.all_real) for r in grid.records]
    [('0', True), ('3/10', False), ('3/5', False)]
    """
    fixed = {name: parse_rational(v) for name, v in (fixed or {}).items()}
    unknown = set(fixed) - set(AXES)
    if unknown:
        raise BracketError(f"Unknown fixed parameters {sorted(unknown)}")

    values = []
    for name in AXES:
        if name in axes:
            values.append(axes[name].values())
        else:
            values.append([fixed.get(name, Fraction(0))])

    points = [amended(g, d, z) for g in values[0] for d in values[1] for z in values[2]]

    if DEBUG:
        print(f"scan: K={spec.K} L={spec.L}, {len(points)} points, jobs={jobs}", file=sys.stderr)

    work = partial(_scan_point, spec, tol)
    if jobs > 1:
        chunksize = max(1, len(points) // (4 * jobs))
        with ProcessPoolExecutor(jobs) as executor:
            records = list(executor.map(work, points, chunksize=chunksize))
    else:
        records = [work(a) for a in points]

    ordered_axes = tuple(axes[name] for name in AXES if name in axes)
    return ScanGrid(spec.K, spec.L, ordered_axes, fixed, tuple(records))


def _fmt(x) -> str:
    return f"{float(x):.9g}"


def grid_to_csv(grid: ScanGrid) -> str:
    lines = ["gamma,delta,z,all_real,max_imag,marginal"]
    for r in grid.records:
        row = [_fmt(r.gamma), _fmt(r.delta), _fmt(r.z), str(r.all_real).lower()]
        row += [_fmt(r.max_imag), str(r.marginal).lower()]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


#
# Bisection
#


@dataclass(frozen=True)
class BoundaryResult:
    axis: str
    fixed: dict
    critical: float
    bracket_width: float
    iterations: int
    real_side: float
    complex_side: float


def _point(axis: str, x: float, fixed: dict) -> AmendedCouplingSet:
    values = {name: fixed.get(name, Fraction(0)) for name in AXES}
    values[axis] = Fraction(x)
    return amended(values["gamma"], values["delta"], values["z"])


def _bisect(
    classify: Callable[[AmendedCouplingSet], Reality],
    axis: str,
    fixed: dict,
    bracket: tuple,
    tol: float,
) -> BoundaryResult:
    if axis not in AXES:
        raise BracketError(f"Unknown axis {axis!r}, expected one of {AXES}")
    if tol <= 0:
        raise ValueError(f"Tolerance must be positive, got {tol}")
    fixed = {name: parse_rational(v) for name, v in fixed.items() if name != axis}

    lo, hi = (x if isinstance(x, float) else float(parse_rational(x)) for x in bracket)
    at_lo = classify(_point(axis, lo, fixed))
    at_hi = classify(_point(axis, hi, fixed))
    if at_lo.all_real == at_hi.all_real:
        state = "real" if at_lo.all_real else "complex"
        raise BracketError(f"Spectrum is {state} at both ends of [{lo}, {hi}]")
    real, cplx = (lo, hi) if at_lo.all_real else (hi, lo)

    iterations = 0
    while abs(cplx - real) > tol and iterations < MAX_BISECTIONS:
        iterations += 1
        mid = (real + cplx) / 2
        r = classify(_point(axis, mid, fixed))
        if not r.marginal:
            if r.all_real:
                real = mid
            else:
                cplx = mid
            continue

        # step around the marginal midpoint
        quarter = (cplx - real) / 4
        q_real = classify(_point(axis, mid - quarter, fixed))
        q_cplx = classify(_point(axis, mid + quarter, fixed))
        sides = [(mid - quarter, q_real), (mid + quarter, q_cplx)]
        sides = [(x, q) for x, q in sides if not q.marginal]
        if not sides:
            raise BracketError(
                f"Marginal on both sides of {mid!r}, bracket stuck at [{real!r}, {cplx!r}]"
            )
        for x, q in sides:
            if q.all_real and abs(x - cplx) < abs(real - cplx):
                real = x
            elif not q.all_real and abs(x - real) < abs(cplx - real):
                cplx = x

        if DEBUG:
            print(f"bisect {axis}: marginal at {mid!r}, now [{real!r}, {cplx!r}]", file=sys.stderr)

    return BoundaryResult(
        axis=axis,
        fixed={name: str(v) for name, v in fixed.items()},
        critical=(real + cplx) / 2,
        bracket_width=abs(cplx - real),
        iterations=iterations,
        real_side=real,
        complex_side=cplx,
    )


def reality_boundary(
    spec: GraphFamilySpec,
    axis: str,
    fixed: dict | None = None,
    bracket: tuple = (0, 2),
    tol: float = BOUNDARY_TOL,
    eval_tol: float = DEFAULT_TOL,
) -> BoundaryResult:
    """
    Bisect the all-real predicate along one axis. The bracket may be given
    in either order; one end must be real and the other not.

    >>> r = reality_boundary(build_graph(1, 1), "gamma", {"delta": 0, "z": 0}, (0, 2))
    >>> round(r.critical, 6)
    1.030776
    """
    return _bisect(lambda a: classify_reality(spec, a, eval_tol), axis, fixed or {}, bracket, tol)


def _sector_reality(split, branch: str, a: AmendedCouplingSet, tol: float) -> Reality:
    plus, minus = sector_roots(split, a)
    roots = plus if branch == "plus" else minus
    tol_imag = max(tol * 100, 1e-8)
    imag = np.abs(roots.imag)
    marginal = bool(np.any((imag >= tol_imag * 1e-2) & (imag <= tol_imag * 1e2)))
    return Reality(bool(np.all(imag <= tol_imag)), float(imag.max()), marginal)


def sector_boundary(
    spec: GraphFamilySpec,
    branch: str,
    axis: str,
    fixed: dict | None = None,
    bracket: tuple = (0, 2),
    tol: float = BOUNDARY_TOL,
    eval_tol: float = DEFAULT_TOL,
) -> BoundaryResult:
    """
    Bisect the reality of one parity sector only (the roots of f_plus or of
    f_minus). Where the two sectors separate this finds gamma_max or
    delta_max even when the other sector is already complex.
    """
    if branch not in ("plus", "minus"):
        raise ValueError(f"Unknown sector {branch!r}")
    split = split_secular(spec)
    return _bisect(
        lambda a: _sector_reality(split, branch, a, eval_tol), axis, fixed or {}, bracket, tol
    )


def boundary_to_json(result: BoundaryResult) -> dict:
    return {
        "axis": result.axis,
        "fixed": result.fixed,
        "critical": result.critical,
        "bracket_width": result.bracket_width,
        "iterations": result.iterations,
        "real_side": result.real_side,
        "complex_side": result.complex_side,
    }


#
# Test functions
#


def test_parse_axes():
    axes = parse_axes("gamma=-1.5:1.5:101;delta=-0.5:0.5:101")
    assert axes["gamma"] == Axis("gamma", Fraction(-3, 2), Fraction(3, 2), 101)
    assert axes["delta"].values()[50] == 0
    assert parse_axes("z=1:1:1")["z"].values() == [1]

    for bad in ("gamma=1:2", "eta=0:1:3", "gamma=0:1:1", "gamma=0:1:3;gamma=0:1:3", "", "z=a:b:3"):
        try:
            parse_axes(bad)
        except BracketError:
            pass
        else:
            raise AssertionError(f"{bad!r} accepted")


def test_k1_boundaries():
    spec = build_graph(1, 1)
    r = reality_boundary(spec, "gamma", {"delta": 0, "z": 0}, (0, 2))
    assert abs(r.critical - 17**0.5 / 4) < 1e-6
    assert r.bracket_width <= BOUNDARY_TOL
    r = reality_boundary(spec, "delta", {"gamma": 0, "z": 0}, (0, 1))
    assert abs(r.critical - 0.25) < 1e-6

    # both signs of the coupling
    r = reality_boundary(spec, "gamma", {"delta": 0}, (0, -2))
    assert abs(r.critical + 17**0.5 / 4) < 1e-6

    # the other coupling does not move the boundary
    r = reality_boundary(spec, "gamma", {"delta": "1/8"}, (0, 2))
    assert abs(r.critical - 17**0.5 / 4) < 1e-6
    r = reality_boundary(spec, "delta", {"gamma": "1/2"}, (1, 0))
    assert abs(r.critical - 0.25) < 1e-6


def test_k2_boundaries():
    spec = build_graph(2, 1)
    r = reality_boundary(spec, "gamma", {"delta": 0, "z": 0}, (0, 2))
    assert abs(r.critical - 21**0.5 / 4) < 1e-6
    r = reality_boundary(spec, "delta", {"gamma": 0, "z": 0}, (0, 1))
    assert abs(r.critical - 5**0.5 / 4) < 1e-6
    r = reality_boundary(spec, "delta", {"gamma": "1/2"}, (0, -1))
    assert abs(r.critical + 5**0.5 / 4) < 1e-6


def test_bad_bracket():
    try:
        reality_boundary(build_graph(1, 1), "gamma", {}, (0, "1/2"))
    except BracketError:
        pass
    else:
        raise AssertionError("bracket without a sign change accepted")


def test_stuck_bisection():
    # a marginal band too wide for the quarter points to step around
    def classify(a: AmendedCouplingSet) -> Reality:
        x = float(a.gamma)
        if abs(x - 0.5) < 0.3:
            return Reality(x < 0.5, 1e-9, True)
        return Reality(x < 0.5, 0.0 if x < 0.5 else 1.0, False)

    try:
        _bisect(classify, "gamma", {}, (0, 1), BOUNDARY_TOL)
    except BracketError as e:
        assert "Marginal on both sides" in str(e)
    else:
        raise AssertionError("stuck bisection returned a result")


def test_scan_survives_solver_failure():
    global classify_reality

    def failing(spec, a, tol):
        raise np.linalg.LinAlgError("Eigenvalues did not converge")

    saved = classify_reality
    classify_reality = failing
    try:
        grid = scan(build_graph(1, 1), parse_axes("gamma=0:1:3"))
    finally:
        classify_reality = saved

    assert len(grid.records) == 3
    for r in grid.records:
        assert r.marginal and not r.all_real and np.isnan(r.max_imag)


def test_sector_boundary():
    # at delta = 1 the minus sector is complex everywhere, the plus sector
    # still turns complex at sqrt(17)/4
    spec = build_graph(1, 1)
    r = sector_boundary(spec, "plus", "gamma", {"delta": 1}, (0, 2))
    assert abs(r.critical - 17**0.5 / 4) < 1e-6
    r = sector_boundary(spec, "minus", "delta", {"gamma": 3}, (0, 1))
    assert abs(r.critical - 0.25) < 1e-6


def test_k1_scan_rectangle():
    spec = build_graph(1, 1)
    grid = scan(spec, parse_axes("gamma=-1.5:1.5:101;delta=-0.5:0.5:101"), {"z": 0}, jobs=2)
    assert len(grid.records) == 101 * 101
    assert grid.records[0].gamma == Fraction(-3, 2) and grid.records[1].delta == Fraction(-49, 100)

    g_max, d_max = 17**0.5 / 4, 0.25
    for r in grid.records:
        g, d = abs(float(r.gamma)), abs(float(r.delta))
        if g <= g_max - 1e-3 and d <= d_max - 1e-3:
            assert r.all_real, r
        elif g >= g_max + 1e-3 or d >= d_max + 1e-3:
            assert not r.all_real, r


def test_scan_details():
    spec = build_graph(1, 1)
    grid = scan(spec, parse_axes("gamma=1/2:1/2:1"), {"delta": "0.1"})
    assert len(grid.records) == 1 and grid.records[0].all_real

    csv = grid_to_csv(scan(spec, parse_axes("gamma=0:1.2:3"), {"delta": "1/3"}))
    lines = csv.splitlines()
    assert lines[0] == "gamma,delta,z,all_real,max_imag,marginal"
    assert lines[1].startswith("0,0.333333333,0,false,")
    assert len(lines) == 4

    # refining keeps the classification of shared points
    coarse = scan(spec, parse_axes("gamma=0:2:11"))
    fine = scan(spec, parse_axes("gamma=0:2:21"))
    assert [r.all_real for r in coarse.records] == [r.all_real for r in fine.records[::2]]


def test_k3_z_scan():
    spec = build_graph(3, 1)
    grid = scan(spec, parse_axes("z=-3:3:61"))
    records = grid.records
    assert records[30].z == 0 and records[30].all_real
    for a, b in zip(records, reversed(records)):
        if not (a.marginal or b.marginal):
            assert a.all_real == b.all_real


if __name__ == "__main__":
    import doctest

    if "-x" in sys.argv:
        sys.argv.remove("-x")
        DEBUG = True

    doctest.testmod()
    test_parse_axes()
    test_k1_boundaries()
    test_k2_boundaries()
    test_bad_bracket()
    test_stuck_bisection()
    test_scan_survives_solver_failure()
    test_sector_boundary()
    test_k1_scan_rectangle()
    test_scan_details()
    test_k3_z_scan()
    print("All tests OK")
