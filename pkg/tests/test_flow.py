import io
from fractions import Fraction

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dynamics.flow import (
    CLEARED,
    STANDARD,
    WrongRankError,
    hrf_vector_field,
    integrate_flow,
    lyapunov_derivative_r2,
    lyapunov_function_r2,
    polynomialize,
    trajectory_frame,
    write_trajectory_csv,
)
from dynamics.integrator import EXTINCTION, T_END_REACHED
from geometry.catalog import catalog_spaces, get_space, make_r2_space
from geometry.ricci import kahler_einstein_lambda, scalar_curvature


@pytest.fixture(scope="module")
def rng():
    return np.random.default_rng(7)


def test_vector_field_golden():
    s = get_space("G2/U(2)#r2")
    assert_allclose(hrf_vector_field(s, [1.0, 2.0]), [-0.75, -1.5], rtol=1e-15)


@pytest.mark.parametrize("dims", [(8, 2), (28, 2), (6, 5)])
def test_r2_polynomial_system_coefficients(dims):
    d1, d2 = dims
    system = polynomialize(make_r2_space(d1, d2))
    rf1, rf2 = system.components
    assert system.degree == 2
    assert rf1.terms == {(2, 0): Fraction(-2 * (d1 + 4 * d2)), (1, 1): Fraction(2 * d2)}
    assert rf2.terms == {(2, 0): Fraction(-8 * d2), (0, 2): Fraction(-d1)}
    assert system.terms(1) == [(Fraction(-8 * d2), (2, 0)), (Fraction(-d1), (0, 2))]


def test_degrees():
    assert polynomialize(get_space("M*")).degree == 6
    assert polynomialize(get_space("E8/U(1)xSU(2)xSU(3)xSU(5)")).degree == 9


@pytest.mark.parametrize("space", catalog_spaces(), ids=lambda s: s.name)
def test_polynomial_field_is_a_positive_multiple(space, rng):
    system = polynomialize(space)
    for comp in system.components:
        assert comp.is_polynomial()
        assert comp.is_zero or comp.degree == system.degree
    for x in rng.uniform(0.2, 4.0, size=(20, space.r)):
        raw = hrf_vector_field(space, x)
        mu = float(system.multiplier.evaluate(list(x)))
        assert mu > 0
        assert_allclose(system(x), mu * raw, rtol=1e-9, atol=1e-9 * mu * np.max(np.abs(raw)))


@pytest.mark.parametrize("space", catalog_spaces(), ids=lambda s: s.name)
def test_conventions_differ_by_a_positive_constant(space):
    std = polynomialize(space, STANDARD)
    clr = polynomialize(space, CLEARED)
    ratios = {
        c / clr.components[k].coefficient(e)
        for k, comp in enumerate(std.components)
        for e, c in comp.items()
    }
    assert len(ratios) == 1
    assert next(iter(ratios)) > 0
    assert clr.degree == std.degree


def test_unknown_convention():
    with pytest.raises(ValueError):
        polynomialize(get_space("G2/U(2)#r2"), "mystery")


# ---------- Lyapunov certificate ----------

def test_lyapunov_golden():
    s = get_space("G2/U(2)#r2")
    assert lyapunov_function_r2([1.0, 1.0]) == 1.0
    assert lyapunov_derivative_r2(s, [1.0, 1.0]) == pytest.approx(-13 / 8, rel=1e-15)


@pytest.mark.parametrize("name", ["G2/U(2)#r2", "F4/Sp(3)xU(1)#r2"])
def test_lyapunov_derivative_is_negative_and_matches_gradient(name, rng):
    s = get_space(name)
    for x in rng.uniform(0.01, 10.0, size=(1000, 2)):
        dv = lyapunov_derivative_r2(s, x)
        assert dv < 0
        assert dv == pytest.approx(float(np.dot(x, hrf_vector_field(s, x))), rel=1e-10)


def test_lyapunov_needs_two_summands():
    with pytest.raises(WrongRankError):
        lyapunov_derivative_r2(get_space("G2/U(2)#r3"), [1.0, 2.0, 3.0])


# ---------- Trajectories ----------

@pytest.mark.parametrize("space", catalog_spaces(), ids=lambda s: s.name)
def test_kahler_einstein_trajectory_matches_closed_form(space):
    lam = float(kahler_einstein_lambda(space))
    t_end = 0.99 / (2 * lam)
    e = np.asarray(space.kahler_einstein, dtype=float)
    traj = integrate_flow(space, e, t_end)
    assert traj.terminated_by == T_END_REACHED
    exact = (1 - 2 * lam * traj.times)[:, None] * e
    assert np.max(np.abs(traj.states - exact)) <= 1e-7


def test_flow_goes_extinct():
    s = get_space("G2/U(2)#r2")
    traj = integrate_flow(s, [1.0, 2.0], 3.0)
    assert traj.terminated_by == EXTINCTION
    t, x = traj.final
    assert t < 4 / 3
    assert np.all(x > 0)


def test_backward_flow_is_stored_in_increasing_time():
    s = get_space("G2/U(2)#r2")
    traj = integrate_flow(s, [1.0, 1.0], -5.0)
    assert np.all(np.diff(traj.times) > 0)
    assert traj.times[0] == -5.0 and traj.times[-1] == 0.0
    assert_allclose(traj.states[-1], [1.0, 1.0])
    assert traj.final[0] == -5.0
    scal = np.array([scalar_curvature(s, x) for x in traj.states])
    assert np.all(np.diff(scal) > 0)
    assert scal[0] < scal[-1] / 2
    assert traj.samples[0] == (-5.0, tuple(float(v) for v in traj.states[0]))


def test_trajectory_frame_and_csv():
    s = get_space("G2/U(2)#r2")
    traj = integrate_flow(s, [1.0, 2.0], 1.3)
    df = trajectory_frame(traj, with_ricci=True)
    assert list(df.columns) == ["t", "x1", "x2", "scal", "ric1", "ric2"]
    assert len(df) == len(traj)
    assert_allclose(df["scal"].iloc[-1], 120 / (32 - 24 * 1.3), rtol=1e-7)
    assert_allclose(df[["x1", "x2"]].iloc[-1], (1 - 0.75 * 1.3) * np.array([1.0, 2.0]), atol=1e-6)

    buf = io.StringIO()
    write_trajectory_csv(traj, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,x1,x2,scal"
    assert lines[-1] == "# terminated_by=t_end_reached"
    assert len(lines) == len(traj) + 2
