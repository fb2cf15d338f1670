from fractions import Fraction

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dynamics.flow import CLEARED, polynomialize
from dynamics.poincare import (
    FixedPointAtInfinity,
    NonHyperbolicError,
    chart_system,
    classify_stability,
    exact_jacobian_at,
    find_invariant_lines,
    fixed_point_report,
    infinity_system,
    jacobian_at,
    normalized_residual,
    system_at_infinity,
    table1_rows,
)
from geometry.catalog import catalog_spaces, expected_classification, get_space, make_r2_space
from geometry.polynomials import LaurentPolynomial

R6 = "E8/U(1)xSU(2)xSU(3)xSU(5)"
R5 = "E8/U(1)xSU(4)xSU(5)"
ALL = [s.name for s in catalog_spaces()]


@pytest.mark.parametrize("dims", [(8, 2), (28, 2), (5, 7)])
def test_r2_chart_system(dims):
    d1, d2 = dims
    chart = chart_system(polynomialize(make_r2_space(d1, d2)))
    u1 = LaurentPolynomial.variable(2, 0)
    u2 = LaurentPolynomial.variable(2, 1)
    assert chart.components[0] == -(u1 - 2) * (-4 * d2 + d1 * u1 + 2 * d2 * u1)
    assert chart.components[1] == 2 * (d1 + 4 * d2 - d2 * u1) * u2
    assert chart.is_infinity_invariant()


def test_r2_infinity_system():
    d1, d2 = 8, 2
    inf = system_at_infinity(make_r2_space(d1, d2))
    u = LaurentPolynomial.variable(1, 0)
    assert inf.components == (-(u - 2) * (-4 * d2 + d1 * u + 2 * d2 * u),)


@pytest.mark.parametrize("name", ALL)
def test_infinity_is_invariant(name):
    chart = chart_system(polynomialize(get_space(name)))
    assert all(c.is_polynomial() for c in chart.components)
    assert chart.is_infinity_invariant()
    assert len(infinity_system(chart).components) == get_space(name).r - 1


def test_chart_system_is_linear_in_the_field():
    s = get_space("G2/U(2)#r3")
    base = polynomialize(s)
    scaled = chart_system(base.scaled(Fraction(7, 3)))
    plain = chart_system(base)
    assert all(a == b * Fraction(7, 3) for a, b in zip(scaled.components, plain.components))


def test_mstar_jacobian_golden():
    inf = system_at_infinity(get_space("M*"))
    expected = ((-1600, 368, 32), (960, -1248, 192), (320, 1760, -1696))
    assert exact_jacobian_at(inf, (2, 3, 4)) == expected
    assert_allclose(jacobian_at(inf, (2.0, 3.0, 4.0)), expected, rtol=1e-12)


@pytest.mark.parametrize("dims", [(8, 2), (28, 2)])
def test_r2_derivative_at_roots(dims):
    d1, d2 = dims
    inf = system_at_infinity(make_r2_space(d1, d2))
    assert exact_jacobian_at(inf, (2,)) == ((-2 * d1,),)
    assert exact_jacobian_at(inf, (Fraction(4 * d2, d1 + 2 * d2),)) == ((2 * d1,),)


def test_zero_system_has_zero_jacobian():
    zero = [LaurentPolynomial.zero(2), LaurentPolynomial.zero(2)]
    assert_allclose(jacobian_at(zero, (1.0, 2.0)), np.zeros((2, 2)))


@pytest.mark.parametrize("name", ["G2/U(2)#r3", "M*", R5])
def test_jacobian_matches_finite_differences(name, fixed_points):
    inf = system_at_infinity(get_space(name))
    for fp in fixed_points(name):
        a = np.asarray(fp.chart_coords)
        jac = jacobian_at(inf, a)
        fd = np.empty_like(jac)
        for j in range(len(a)):
            h = 1e-6 * max(1.0, abs(a[j]))
            up, down = a.copy(), a.copy()
            up[j] += h
            down[j] -= h
            fd[:, j] = (inf(up) - inf(down)) / (2 * h)
        assert_allclose(fd, jac, rtol=1e-6, atol=1e-6 * np.max(np.abs(jac)))


# ---------- Fixed points ----------

def test_r2_fixed_points(fixed_points):
    points = fixed_points("G2/U(2)#r2")
    assert [fp.exact_chart for fp in points] == [(2,), (Fraction(2, 3),)]
    assert [fp.exact_lam for fp in points] == [Fraction(3, 8), Fraction(11, 24)]
    assert [(fp.d_stb, fp.d_unstb) for fp in points] == [(1, 1), (0, 2)]
    assert [fp.exact_representative for fp in points] == [(1, 2), (1, Fraction(2, 3))]
    assert points[0].is_kahler_einstein and not points[1].is_kahler_einstein
    assert all(fp.transverse_eigenvalue > 0 for fp in points)


R3_POINTS = {
    "E8/E6xSU(2)xU(1)": [(0.914286, 1.54198), (1.0049, 0.129681)],
    "E8/SU(8)xU(1)": [(0.717586, 1.25432), (1.06853, 0.473177)],
    "E7/SU(5)xSU(3)xU(1)": [(0.733552, 1.27681), (1.06029, 0.443559)],
    "E7/SU(6)xSU(2)xU(1)": [(0.85368, 1.45259), (1.01573, 0.229231)],
    "E6/SU(3)xSU(3)xSU(2)xU(1)": [(0.771752, 1.33186), (1.04268, 0.373467)],
    "F4/SU(3)xSU(2)xU(1)#r3": [(0.678535, 1.20122), (1.09057, 0.546045)],
    "G2/U(2)#r3": [(1.67467, 2.05238), (0.186894, 0.981478)],
}


@pytest.mark.parametrize("name", sorted(R3_POINTS))
def test_r3_fixed_points(name, fixed_points):
    points = fixed_points(name)
    assert len(points) == 3
    assert points[0].exact_chart == (2, 3)
    assert_allclose([fp.chart_coords for fp in points[1:]], R3_POINTS[name], atol=1e-4)


def test_mstar_fixed_points(fixed_points):
    points = fixed_points("M*")
    assert_allclose(
        [fp.chart_coords for fp in points],
        [
            (2, 3, 4),
            (1.09705, 0.770347, 1.29696),
            (1.15607, 1.01783, 0.214618),
            (0.649612, 1.10943, 1.06103),
            (0.763357, 1.00902, 0.191009),
        ],
        atol=1e-4,
    )
    assert (points[4].d_stb, points[4].d_unstb) == (1, 3)


def test_r5_and_r6_fixed_points(fixed_points):
    for name, lam1 in [(R5, Fraction(11, 60)), (R6, Fraction(3, 20))]:
        space = get_space(name)
        points = fixed_points(name)
        assert len(points) == space.expected_n
        assert_allclose([fp.chart_coords for fp in points], space.reference_points, atol=1e-4)
        assert points[0].exact_lam == lam1
        assert_allclose([fp.lam for fp in points], space.reference_lambdas, atol=1e-5)


@pytest.mark.parametrize("name", ALL)
def test_classification_reproduces_the_table(name, fixed_points):
    space = get_space(name)
    points = fixed_points(name)
    assert [(fp.d_stb, fp.d_unstb) for fp in points] == expected_classification(space)
    for fp in points:
        assert fp.d_stb + fp.d_unstb == space.r
        assert classify_stability(fp) == (fp.d_stb, fp.d_unstb)
        assert fp.residual <= 1e-10
        assert fp.transverse_eigenvalue > 0
        assert fp.lam > 0


def test_table1_rows():
    spaces = [get_space("G2/U(2)#r2"), get_space("E8/E6xSU(2)xU(1)")]
    rows = table1_rows(spaces)
    assert all(row.matches for row in rows)
    assert rows[0].found == ((1, 1), (0, 2))
    assert rows[0].diff() == []


def test_non_hyperbolic_point_is_rejected():
    fp = FixedPointAtInfinity(
        index=2,
        chart_coords=(1.0, 1.0),
        representative=(1.0, 1.0, 1.0),
        eigenvalues=(complex(1e-9, 0.0), complex(-1.0, 0.0)),
        jacobian=((1e-9, 0.0), (0.0, -1.0)),
        transverse_eigenvalue=1.0,
        d_stb=1,
        d_unstb=2,
        lam=0.5,
        residual=0.0,
    )
    with pytest.raises(NonHyperbolicError):
        classify_stability(fp)


def test_classification_with_complex_pairs():
    fp = FixedPointAtInfinity(
        index=2,
        chart_coords=(1.0, 1.0),
        representative=(1.0, 1.0, 1.0),
        eigenvalues=(complex(-1.0, 2.0), complex(-1.0, -2.0)),
        jacobian=((-1.0, 2.0), (-2.0, -1.0)),
        transverse_eigenvalue=1.0,
        d_stb=2,
        d_unstb=1,
        lam=0.5,
        residual=0.0,
    )
    assert classify_stability(fp) == (2, 1)


def test_residual_ignores_the_size_of_the_coefficients(fixed_points):
    space = get_space("E8/E6xSU(2)xU(1)")
    std = system_at_infinity(space).components
    clr = system_at_infinity(space, CLEARED).components
    for fp in fixed_points(space.name)[1:]:
        assert fp.exact_chart is None
        assert normalized_residual(std, fp.chart_coords) == normalized_residual(clr, fp.chart_coords)
        assert fp.residual == normalized_residual(std, fp.chart_coords) <= 1e-10


def test_normalized_residual_of_an_exact_root():
    u = LaurentPolynomial.variable(1, 0)
    assert normalized_residual([1000 * (u - 2), LaurentPolynomial.zero(1)], [2.0]) == 0.0
    assert normalized_residual([1000 * (u - 2)], [2.5]) == 0.25


def test_cleared_convention_gives_the_same_points():
    space = get_space("E8/E6xSU(2)xU(1)")
    inf = system_at_infinity(space, CLEARED)
    assert all(p.evaluate([2, 3]) == 0 for p in inf.components)
    std = system_at_infinity(space)
    assert inf.transverse.evaluate([2, 3]) * std.transverse.evaluate([2, 3]) > 0


# ---------- Agreement between the three characterizations ----------

@pytest.mark.parametrize("name", ALL)
def test_einstein_lines_and_fixed_points_agree(name, fixed_points, einstein_metrics):
    space = get_space(name)
    reps = np.array([fp.representative for fp in fixed_points(name)])
    lines = np.array(find_invariant_lines(space))
    metrics = np.array([m.x for m in einstein_metrics(name)])
    assert reps.shape == lines.shape == metrics.shape
    assert_allclose(lines, reps, atol=1e-8)
    assert_allclose(metrics, reps, atol=1e-8)


def test_invariant_lines_r2():
    d1, d2 = 28, 2
    lines = find_invariant_lines(make_r2_space(d1, d2))
    assert_allclose(lines, [(1, 2), (1, 4 * d2 / (d1 + 2 * d2))], rtol=1e-10)


def test_fixed_point_report(fixed_points):
    space = get_space("G2/U(2)#r2")
    report = fixed_point_report(space, fixed_points("G2/U(2)#r2"))
    assert report["space"] == "G2/U(2)#r2"
    assert report["N"] == 2
    first = report["points"][0]
    assert first["representative"] == [1.0, 2.0]
    assert first["is_kahler_einstein"] is True
    assert first["exact_lambda"] == "3/8"
    assert set(first) >= {"chart", "eigenvalues", "d_stb", "d_unstb", "lambda"}
    assert first["eigenvalues"][0]["re"] < 0
