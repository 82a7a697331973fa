import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slspec import (
    BoundaryParams,
    Example1,
    Example2,
    ExpressionModel,
    InvalidInputError,
    NodeProduct,
    OdeDeterminant,
    PotentialGrid,
    SineQuotient,
    SpectrumProduct,
    ZeroModel,
    count_zeros_disk,
    example1_f,
    example2_u,
    model_from_descriptor,
    node_product_s,
    node_product_sdot,
    pw_structure_check,
    sine_quotient,
    spectrum_product_u,
    truncated_sine_product,
)
from slspec.models import CallableModel, example2_clusters

FREE = BoundaryParams(1.0, 0)


def test_sine_quotient_values():
    assert abs(sine_quotient(0.5) - 2.0) < 1e-15
    assert abs(sine_quotient(0.0) - math.pi) < 1e-15


def test_wallis_truncation():
    assert abs(truncated_sine_product(0.5, 10_000) / 2.0 - 1.0) <= 1e-4


def test_node_product_reduces_to_sine():
    assert abs(node_product_s([], 0.5) - 2.0) < 1e-14


def test_node_product_head_values():
    assert abs(node_product_s([1.05], 1.05)) < 1e-14
    # 2 (1.05**2 - 1/4)/(1 - 1/4) by direct arithmetic
    assert abs(node_product_s([1.05], 0.5) - 2.2733333333333334) < 1e-13


def test_node_product_sdot_unperturbed():
    assert abs(node_product_sdot([], 3) + math.pi / 3) < 1e-14
    assert abs(node_product_sdot([], 2) - math.pi / 2) < 1e-14


def test_node_product_sdot_head_vs_difference():
    h = 1e-6
    fd = (node_product_s([1.05], 1.05 + h) - node_product_s([1.05], 1.05 - h)) / (2 * h)
    assert abs(node_product_sdot([1.05], 1) - fd) < 1e-8


def test_spectrum_product_collapses():
    assert abs(spectrum_product_u(1.0, 0, [], 0.5) + 1.0) < 1e-14


def test_spectrum_product_vanishes_at_node():
    nodes = [1.1, 2.05]
    assert abs(spectrum_product_u(1.0, 1, nodes, 3.0)) < 1e-13
    assert abs(spectrum_product_u(1.0, 1, nodes, 2.05)) < 1e-13


def test_spectrum_product_against_raw_product():
    nodes = np.array([1.1, 2.05])
    mu = 0.3
    n = np.arange(1, 1_000_001, dtype=float)
    lam = n**2
    lam[:2] = nodes**2
    raw = 1.0 * math.pi * mu * np.prod((lam - mu * mu) / n**2)
    # raw tail error is about mu**2 / 10**6
    assert abs(spectrum_product_u(1.0, 1, nodes, mu) - raw) <= 1e-5


def test_example1_values():
    assert example1_f(2, 1 / math.sqrt(2), 0.0) == 0
    assert abs(example1_f(1, 0.5, 1.0) - 1.0) < 1e-14


def test_example1_double_zero():
    model = Example1(2, 1 / math.sqrt(2))
    assert count_zeros_disk(model, 2 * math.sqrt(2), 0.25) == 2


def test_example1_parameter_checks():
    with pytest.raises(InvalidInputError):
        Example1(0, 0.5)
    with pytest.raises(InvalidInputError):
        Example1(2, 1.5)


def test_example2_values():
    assert example2_u(10, 12, 0.0) == 0
    assert abs(example2_u(10, 12, 3.0)) > 0


def test_example2_clusters():
    # n = 2**p + j for j = 1..floor(ln p)
    assert example2_clusters(10, 10) == [(1025, 2048), (1026, 2048)]


def test_example2_multiplicity():
    model = Example2(10, 12)
    assert count_zeros_disk(model, 2048.0, 0.5) == 2 * (int(math.log(10)) + 1)
    assert count_zeros_disk(model, 2058.0, 0.5) == 2
    assert count_zeros_disk(model, 2052.0, 0.5) == 0  # node n = 1026 moved away


def test_example2_parameter_checks():
    with pytest.raises(InvalidInputError):
        Example2(9, 12)
    with pytest.raises(InvalidInputError):
        Example2(12, 11)


def test_pw_check_free():
    r = pw_structure_check(OdeDeterminant(PotentialGrid.zero(257), FREE), FREE)
    assert r["verdict"] == "PASS"
    assert r["odd_defect"] == 0.0


@pytest.mark.slow
def test_pw_check_constant_and_corrupted():
    model = OdeDeterminant(PotentialGrid.constant(1.0, 257), FREE)
    assert pw_structure_check(model, FREE)["verdict"] == "PASS"
    shifted = CallableModel(lambda mu: model(mu) + 0.1)
    r = pw_structure_check(shifted, FREE)
    # mu * 0.1 is odd, so the constant shift shows up as missing decay
    assert r["verdict"] == "FAIL" and not r["decay_ok"]
    skewed = CallableModel(lambda mu: model(mu) + 0.1 * mu)
    r = pw_structure_check(skewed, FREE)
    assert r["verdict"] == "FAIL" and not r["odd_ok"]


def test_expression_model_safety():
    m = ExpressionModel("sin(pi*mu/2)**2/mu**2", value_at_zero=math.pi**2 / 4)
    assert abs(m(0.0) - math.pi**2 / 4) < 1e-15
    with pytest.raises(InvalidInputError):
        ExpressionModel("__import__('os')")
    with pytest.raises(InvalidInputError):
        ExpressionModel("mu.real")


@pytest.mark.parametrize(
    "model",
    [
        ZeroModel(),
        SineQuotient(2 - 1j),
        NodeProduct([1.05]),
        SpectrumProduct(0.5 + 0.5j, 1, [1.1, 2.05]),
        Example1(2, 0.7),
        Example2(10, 11),
        ExpressionModel("exp(-mu**2)", even=True),
        OdeDeterminant(PotentialGrid.constant(1 + 1j, 17), BoundaryParams(0.3, 1)),
    ],
)
def test_descriptor_round_trip(model):
    clone = model_from_descriptor(model.descriptor())
    pts = np.array([0.3 + 0.1j, 1.7, 4.4 - 0.6j])
    assert clone.descriptor() == model.descriptor()
    np.testing.assert_array_equal(clone(pts), model(pts))


mus = st.complex_numbers(max_magnitude=30, allow_nan=False, allow_infinity=False)


@given(mu=mus)
def test_sine_quotient_matches_direct(mu):
    if abs(mu) < 1e-3 or abs(mu.imag) > 10:
        return
    direct = np.sin(np.pi * mu) / mu
    assert abs(sine_quotient(mu) - direct) <= 1e-12 * max(1.0, abs(direct)) * (1 + abs(mu))


@given(mu=mus, head=st.lists(st.floats(-0.09, 0.09), min_size=0, max_size=3, unique=True))
def test_node_product_even_and_zero(mu, head):
    nodes = np.sort(len(head) + 0.5 + np.array(head, dtype=float))
    s, sm = node_product_s(nodes, mu), node_product_s(nodes, -mu)
    assert abs(s - sm) <= 1e-12 * max(1.0, abs(s))
    for node in nodes:
        assert abs(node_product_s(nodes, node)) < 1e-10


@given(head=st.lists(st.floats(-0.09, 0.09), min_size=1, max_size=3, unique=True), data=st.data())
def test_sdot_matches_difference(head, data):
    nodes = np.sort(len(head) + 0.5 + np.array(head, dtype=float))
    n = data.draw(st.integers(1, len(nodes) + 4))
    mu_n = nodes[n - 1] if n <= len(nodes) else float(n)
    h = 1e-6
    fd = (node_product_s(nodes, mu_n + h) - node_product_s(nodes, mu_n - h)) / (2 * h)
    assert abs(node_product_sdot(nodes, n) - fd) <= 1e-6 * max(1.0, abs(fd))


@given(mu=mus, k=st.integers(1, 4), alpha=st.floats(0.05, 0.95))
def test_example1_odd(mu, k, alpha):
    if abs(mu.imag) > 8:
        return
    f = example1_f(k, alpha, mu)
    assert abs(f + example1_f(k, alpha, -mu)) <= 1e-12 * max(1e-300, abs(f))


@given(mu=mus, b=mus, theta=st.integers(0, 1))
def test_spectrum_product_odd(mu, b, theta):
    nodes = [1.1, 2.05]
    u = spectrum_product_u(b, theta, nodes, mu)
    assert abs(u + spectrum_product_u(b, theta, nodes, -mu)) <= 1e-12 * max(1e-300, abs(u))
