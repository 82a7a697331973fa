import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slspec import (
    BoundaryParams,
    Example1,
    InvalidInputError,
    OdeDeterminant,
    PotentialGrid,
    Rect,
    SpectrumList,
    ZeroOnBoundaryError,
    count_zeros,
    count_zeros_disk,
    determinant,
    find_eigenvalues,
    newton,
    tail_regularity,
)
from slspec.models import CallableModel
from slspec.spectral import CONVERGENT_LIKE, INCONCLUSIVE, determinant_derivative

FREE = BoundaryParams(1.0, 0)


def _asym(x):
    return 1 + 1j * np.cos(2 * x) + 0.5 * np.sin(x) + 0.3 * np.cos(x)


# roots of Delta for _asym, b = 0.7+0.2i, theta = 1 from a DOP853 determinant
# and scipy's secant iteration; frozen
ASYM_ROOTS = [
    1.649521948086221 - 0.21200415568872985j,
    2.3844183056845276 + 0.002929860661016821j,
    3.2501221203834167 - 0.007730852442313269j,
    4.191660720833935 - 0.007717036769038471j,
    5.154664384919093 - 0.006576490413675389j,
    6.129489304796573 - 0.00565178842320379j,
]


def _free_model():
    return OdeDeterminant(PotentialGrid.zero(), FREE)


def test_determinant_free_half():
    d = determinant(PotentialGrid.zero(), BoundaryParams(2.0, 1), 0.5)
    assert abs(d - 4.0) < 1e-9


@pytest.mark.parametrize("n", [1, 2, 5])
@pytest.mark.parametrize("theta", [0, 1])
def test_determinant_free_integers(n, theta):
    assert abs(determinant(PotentialGrid.zero(), BoundaryParams(0.3 - 2j, theta), float(n))) < 1e-9


def test_determinant_constant_potential():
    assert abs(determinant(PotentialGrid.constant(1.0), FREE, math.sqrt(2.0))) < 1e-8


def test_determinant_derivative_free():
    m = _free_model()
    assert abs(determinant_derivative(m, 0.5) - 4.0) < 1e-6
    assert abs(determinant_derivative(m, 1.0) - math.pi) < 1e-6


def test_determinant_derivative_constant():
    # Delta = -sin(pi nu)/nu with nu = sqrt(mu^2 - 1)
    mu = math.sqrt(2.0)
    want = math.pi * mu  # d/dmu at nu = 1
    got = determinant_derivative(OdeDeterminant(PotentialGrid.constant(1.0), FREE), mu)
    assert abs(got - want) < 1e-6


def test_count_zeros_free():
    m = _free_model()
    assert count_zeros(m, Rect(0.5, 3.5, -1, 1)) == 3
    assert count_zeros(m, Rect(0.1, 0.4, -0.2, 0.2)) == 0


def test_count_zeros_double_zero():
    model = Example1(2, 1 / math.sqrt(2))
    c = 2 * math.sqrt(2)
    assert count_zeros(model, Rect(c - 0.2, c + 0.2, -0.2, 0.2)) == 2
    assert count_zeros_disk(model, c, 0.2) == 2


def test_count_zeros_boundary_error():
    with pytest.raises(ZeroOnBoundaryError):
        count_zeros(_free_model(), Rect(1.0, 2.5, -0.5, 0.5))


@given(
    zs=st.lists(
        st.tuples(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9)), min_size=1, max_size=5
    )
)
def test_count_zeros_polynomial_property(zs):
    roots = np.array([complex(a, b) for a, b in zs])
    # keep roots away from the contour
    inside = np.sum((np.abs(roots.real) < 0.5) & (np.abs(roots.imag) < 0.5))
    near = np.any((np.abs(np.abs(roots.real) - 0.5) < 0.02) & (np.abs(roots.imag) < 0.52))
    near |= np.any((np.abs(np.abs(roots.imag) - 0.5) < 0.02) & (np.abs(roots.real) < 0.52))
    if near:
        return
    model = CallableModel(lambda mu: np.prod(mu[..., None] - roots, axis=-1) * np.exp(mu))
    assert count_zeros(model, Rect(-0.5, 0.5, -0.5, 0.5)) == inside


@given(root=st.tuples(st.floats(1, 20), st.floats(-1, 1)), mult=st.integers(1, 3))
def test_newton_planted_root(root, mult):
    z = complex(*root)
    model = CallableModel(lambda mu: (mu - z) ** mult * np.cos(mu / 7.0 + 0.1))
    mu, _, ok = newton(model, z + 0.05 - 0.03j, multiplicity=mult)
    # an m-fold zero is resolvable only to about eps**(1/m)
    assert ok and abs(mu - z) < {1: 1e-8, 2: 1e-6, 3: 1e-4}[mult]


def test_free_spectrum_twenty():
    spec = find_eigenvalues(_free_model(), 20, bc=FREE)
    assert len(spec) == 20
    assert np.max(np.abs(spec.mus - np.arange(1, 21))) <= 1e-8
    assert np.all(spec.multiplicities == 1)


def test_constant_spectrum():
    q0 = 1.0
    spec = find_eigenvalues(OdeDeterminant(PotentialGrid.constant(q0), FREE), 10, bc=FREE)
    n = np.arange(1, 11)
    assert np.max(np.abs(spec.lambdas - (n**2 + q0))) <= 1e-6


def _winding_number(f, rect, pts=128):
    """Brute-force winding by phase unwrapping on a densely sampled boundary."""
    x0, x1, y0, y1 = rect
    while True:
        t = np.linspace(0.0, 1.0, pts, endpoint=False)
        path = np.concatenate([
            x0 + (x1 - x0) * t + 1j * y0,
            x1 + 1j * (y0 + (y1 - y0) * t),
            x1 - (x1 - x0) * t + 1j * y1,
            x0 + 1j * (y1 - (y1 - y0) * t),
        ])
        vals = f(np.append(path, path[0]))
        ph = np.unwrap(np.angle(vals))
        if np.max(np.abs(np.diff(ph))) < 0.5 or pts > 8192:
            return int(round((ph[-1] - ph[0]) / (2 * np.pi)))
        pts *= 2


def _subdivision_oracle(f, rect, size=2e-4):
    boxes, found = [rect], []
    while boxes:
        x0, x1, y0, y1 = boxes.pop()
        k = _winding_number(f, (x0, x1, y0, y1))
        if k == 0:
            continue
        if max(x1 - x0, y1 - y0) < size:
            found.extend([complex((x0 + x1) / 2, (y0 + y1) / 2)] * k)
            continue
        # irrational split points keep zeros off the new edges
        xm = x0 + 0.4871 * (x1 - x0)
        ym = y0 + 0.5129 * (y1 - y0)
        boxes += [(x0, xm, y0, ym), (xm, x1, y0, ym), (x0, xm, ym, y1), (xm, x1, ym, y1)]
    return sorted(found, key=lambda z: z.real)


def test_random_potential_matches_subdivision_oracle():
    q = PotentialGrid.from_function(_asym, 513)
    bc = BoundaryParams(0.7 + 0.2j, 1)

    def f(mu):
        return determinant(q, bc, mu)

    oracle = _subdivision_oracle(f, (0.5, 6.5, -1.97, 2.03))
    spec = find_eigenvalues(OdeDeterminant(q, bc), 6, bc=bc)
    assert len(oracle) == 6 == int(spec.multiplicities.sum())
    assert np.max(np.abs(spec.mus - np.array(oracle))) < 5e-4
    # and the finer 2049-point grid against the independent integrator
    fine = find_eigenvalues(OdeDeterminant(PotentialGrid.from_function(_asym), bc), 6, bc=bc)
    assert np.max(np.abs(fine.mus - np.array(ASYM_ROOTS))) < 1e-7


def test_zero_b_regime_uses_subdivision():
    q = PotentialGrid.from_function(_asym, 513)
    bc = BoundaryParams(0.0, 0)
    model = OdeDeterminant(q, bc)
    spec = find_eigenvalues(model, 4, bc=bc)
    total = count_zeros(model, Rect(0.5, 4.5, -2.0, 2.0))
    assert int(spec.multiplicities.sum()) == total
    assert np.max(np.abs(model(spec.mus))) < 1e-8


def test_spectrum_list_indexing():
    spec = SpectrumList.from_mus([3.0, 1.0, 2.0], [1, 2, 1])
    assert [e.n for e in spec.entries] == [1, 3, 4]
    assert list(spec.multiplicities) == [2, 1, 1]


@given(st.lists(st.floats(0.5, 50), min_size=1, max_size=12, unique=True), st.data())
def test_spectrum_list_rank_property(mus, data):
    mults = data.draw(st.lists(st.integers(1, 3), min_size=len(mus), max_size=len(mus)))
    spec = SpectrumList.from_mus(mus, mults)
    ns = [e.n for e in spec.entries]
    assert ns[0] == 1
    assert all(b - a == m for a, b, m in zip(ns, ns[1:], spec.multiplicities))
    assert np.all(np.diff(spec.mus.real) > 0)


def test_tail_regularity_basel():
    n = np.arange(1, 1001)
    rep = tail_regularity(SpectrumList.from_mus(n + 1.0 / n))
    assert abs(rep.partial_l2_sums[-1] - math.pi**2 / 6) < 1e-3
    assert rep.verdict == CONVERGENT_LIKE


def test_tail_regularity_exact_integers():
    rep = tail_regularity(SpectrumList.from_mus(np.arange(1, 11, dtype=float)))
    assert np.all(rep.r_n == 0) and rep.partial_l2_sums[-1] == 0
    assert rep.verdict == CONVERGENT_LIKE


def test_tail_regularity_harmonic():
    n = np.arange(1, 1001)
    rep = tail_regularity(SpectrumList.from_mus(n + 1.0 / np.sqrt(n)))
    assert rep.verdict == INCONCLUSIVE


def test_tail_regularity_rejects_gaps():
    from slspec import SpectrumEntry

    gappy = SpectrumList((SpectrumEntry(1, 1.0, 1), SpectrumEntry(3, 3.0, 1)))
    with pytest.raises(InvalidInputError):
        tail_regularity(gappy)
