import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slspec import (
    FundamentalOverflowError,
    InvalidInputError,
    PotentialGrid,
    random_trig_potential,
    solve_fundamental,
    solve_fundamental_batch,
    solve_fundamental_path,
    wronskian_defect,
)
from slspec.fundamental import FundamentalEndpoint, substeps


def _asym(x):
    return 1 + 1j * np.cos(2 * x) + 0.5 * np.sin(x) + 0.3 * np.cos(x)


# scipy DOP853 with rtol=1e-13 on the same q(x); frozen
ODE_ORACLE = {
    3.7 + 0.4j: [
        0.12922067109454138 + 1.7164226462340575j,
        7.134156035327545 + 0.1007571902214417j,
        -0.5595475602713305 + 0.0729071732231952j,
        0.13785287174082722 + 1.7577599394308603j,
    ],
    12.3 + 0j: [
        0.7145140267157667 - 3.667739731787587e-05j,
        -8.568532280918857 + 0.02829133097785356j,
        0.05700419238520602 + 0.00019353723227778005j,
        0.7159443255692969 - 2.7076548852770276e-05j,
    ],
    0j: [
        21.50670836877483 + 0.09017388133033094j,
        21.225623053881943 + 5.708351763094728j,
        17.067447505567905 - 3.399732242041688j,
        17.797855126580863 + 1.1001524233463464j,
    ],
}


def test_free_potential_mu_one():
    e = solve_fundamental(PotentialGrid.zero(), 1.0)
    np.testing.assert_allclose(e.as_array(), [-1, 0, 0, -1], atol=1e-9)


def test_free_potential_mu_zero():
    e = solve_fundamental(PotentialGrid.zero(), 0.0)
    np.testing.assert_allclose(e.as_array(), [1, 0, math.pi, 1], atol=1e-12)


def test_constant_potential_closed_form():
    e = solve_fundamental(PotentialGrid.constant(1.0), math.sqrt(2.0))
    np.testing.assert_allclose(e.as_array(), [-1, 0, 0, -1], atol=1e-8)


@pytest.mark.parametrize("q0", [1.0, 2 + 1j, -3.0])
@pytest.mark.parametrize("mu", [0.7, 5.5 + 0.3j, 20.0 - 0.8j])
def test_constant_potential_general(q0, mu):
    nu = np.sqrt(complex(mu) ** 2 - q0)
    want = [np.cos(np.pi * nu), -nu * np.sin(np.pi * nu), np.sin(np.pi * nu) / nu, np.cos(np.pi * nu)]
    e = solve_fundamental(PotentialGrid.constant(q0), mu)
    np.testing.assert_allclose(e.as_array(), want, atol=1e-8, rtol=1e-8)


@pytest.mark.parametrize("mu", list(ODE_ORACLE))
def test_against_independent_integrator(mu):
    q = PotentialGrid.from_function(_asym)
    e = solve_fundamental(q, mu)
    want = np.array(ODE_ORACLE[mu])
    assert np.max(np.abs(e.as_array() - want)) <= 1e-8 * (1 + np.max(np.abs(want)))


def test_path_sine_on_coarse_grid():
    q = PotentialGrid.zero(9)
    p = solve_fundamental_path(q, 1.0)
    np.testing.assert_allclose(p.s, np.sin(q.x), atol=1e-8)


def test_path_constant_potential():
    q = PotentialGrid.constant(1.0, 257)
    p = solve_fundamental_path(q, math.sqrt(2.0))
    np.testing.assert_allclose(p.s, np.sin(q.x), atol=1e-8)
    assert np.max(p.wronskian_defect()) <= 1e-8


def test_path_endpoint_matches_solver():
    q = PotentialGrid.from_function(_asym, 513)
    p = solve_fundamental_path(q, 4.2 + 0.1j)
    e = solve_fundamental(q, 4.2 + 0.1j)
    np.testing.assert_allclose(p.values[-1], e.as_array(), rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize(
    "vals,want",
    [((-1, 0, 0, -1), 0.0), ((1, 0, math.pi, 1), 0.0), ((1, 1, 1, 1), 1.0)],
)
def test_wronskian_defect_arithmetic(vals, want):
    assert wronskian_defect(FundamentalEndpoint(*vals, mu=0)) == want


def test_batch_matches_scalar():
    q = PotentialGrid.from_function(_asym, 1025)
    mus = np.array([0.3, 7 + 0.5j, -2.2, 15.0])
    batch = solve_fundamental_batch(q, mus)
    for mu, row in zip(mus, batch):
        assert np.array_equal(row, solve_fundamental(q, mu).as_array())


def test_overflow_is_reported():
    with pytest.raises(FundamentalOverflowError) as err:
        solve_fundamental(PotentialGrid.zero(65), 250j)
    assert err.value.mu == 250j


def test_input_validation():
    with pytest.raises(InvalidInputError):
        PotentialGrid(np.zeros(5))
    with pytest.raises(InvalidInputError):
        PotentialGrid(np.array([0.0] * 8 + [np.nan]))
    with pytest.raises(InvalidInputError):
        solve_fundamental(PotentialGrid.zero(65), complex("nan"))


def test_grid_is_immutable():
    q = PotentialGrid.zero(17)
    with pytest.raises(ValueError):
        q.samples[0] = 1.0


def test_substep_rule():
    q = PotentialGrid.zero(2049)
    assert substeps(q, 30.0) == math.ceil(q.step * 31.0 / 0.008)
    assert substeps(q, 5j) == substeps(q, 5.0)


def test_large_imaginary_part_relative_defect():
    # absolute defects are not meaningful once |c| ~ exp(pi |Im mu|)
    q = random_trig_potential(np.random.default_rng(3), point_count=1025)
    e = solve_fundamental(q, 3.0 + 8.0j)
    scale = abs(e.c_end * e.s_prime_end) + abs(e.c_prime_end * e.s_end)
    assert wronskian_defect(e) / scale <= 1e-8


@given(
    seed=st.integers(0, 2**31 - 1),
    re=st.floats(-30, 30),
    im=st.floats(-1, 1),
)
def test_wronskian_property(seed, re, im):
    q = random_trig_potential(np.random.default_rng(seed), point_count=513)
    assert wronskian_defect(solve_fundamental(q, complex(re, im))) <= 1e-8


@given(seed=st.integers(0, 2**31 - 1), re=st.floats(0, 25), im=st.floats(-2, 2))
def test_even_in_mu(seed, re, im):
    q = random_trig_potential(np.random.default_rng(seed), point_count=257)
    mu = complex(re, im)
    assert np.array_equal(solve_fundamental(q, mu).as_array(), solve_fundamental(q, -mu).as_array())


@given(seed=st.integers(0, 2**31 - 1), mu=st.floats(0.5, 15))
def test_grid_refinement_converges(seed, mu):
    rng = np.random.default_rng(seed)
    n = np.arange(4)
    a = rng.normal(size=4) + 1j * rng.normal(size=4)

    def fn(x):
        return np.cos(np.outer(x, n)) @ a

    coarse = solve_fundamental(PotentialGrid.from_function(fn, 513), mu).as_array()
    fine = solve_fundamental(PotentialGrid.from_function(fn, 2049), mu).as_array()
    assert np.max(np.abs(coarse - fine)) <= 1e-6 * (1 + np.max(np.abs(fine)))
