import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from axisym.spectrum import (AdmissibilityError, CustomXi, DecayCertificate, Exponential,
                             GammaBlock, Indicator, Kronecker, LegendreMatern, Multiquadric,
                             Ones, Rational, SpectrumModel, check_c4, f, fg_matrices, g,
                             gamma_block, lag_matrices)

xis = st.one_of(
    st.builds(LegendreMatern, st.floats(0.5, 200), st.floats(0.6, 3.0)),
    st.builds(Multiquadric, st.floats(0.05, 0.95)),
)
rhos = st.one_of(st.just(Kronecker()), st.builds(Exponential, st.floats(0.1, 5.0)))
lams = st.one_of(st.builds(Indicator, st.integers(0, 12)), st.builds(Rational, st.floats(0, 3)),
                 st.just(Ones()))
models = st.builds(SpectrumModel, xis, rhos, lams, st.floats(-2, 2))


@st.composite
def indices(draw):
    m = draw(st.integers(0, 15))
    return m, draw(st.integers(m, 25)), draw(st.integers(m, 25))


def test_family_values():
    assert np.allclose(LegendreMatern(100, 1.5).values(2), [100 ** -2, 101 ** -2, 104 ** -2])
    assert np.allclose(Multiquadric(0.7).values(2), [0.3, 0.21, 0.147])
    assert np.array_equal(Indicator(2).values(4), [1, 1, 1, 0, 0])
    assert np.allclose(Rational(0.5).values(2), [1, 1 / 1.5, 1 / 3])
    assert np.array_equal(Ones().values(3), np.ones(4))
    assert Exponential(1.0)(2.0) == pytest.approx(math.exp(-2))
    assert Kronecker()(0) == 1.0 and Kronecker()(1) == 0.0 and Kronecker()(0.5) == 0.0


@pytest.mark.parametrize("bad", [lambda: LegendreMatern(0, 1), lambda: LegendreMatern(1, 0),
                                 lambda: Multiquadric(1.0), lambda: Exponential(0.0),
                                 lambda: Indicator(-1), lambda: Indicator(1.5),
                                 lambda: Rational(-1), lambda: CustomXi(()),
                                 lambda: CustomXi((1.0, -0.1))])
def test_family_validation(bad):
    with pytest.raises(ValueError):
        bad()


def test_custom_xi_range():
    xi = CustomXi((1, 0.5, 0.25))
    assert xi.n_max == 2
    with pytest.raises(ValueError):
        xi.values(3)


def test_f_examples():
    model = SpectrumModel(Multiquadric(0.7), Kronecker(), Indicator(4))
    assert f(model, 0, 2, 2) == pytest.approx(0.147)
    assert f(model, 0, 2, 3) == 0.0
    assert f(model, 5, 6, 6) == 0.0
    with pytest.raises(ValueError):
        f(model, 3, 2, 4)


def test_g_example_value():
    model = SpectrumModel(Multiquadric(0.7), Exponential(1.0), Ones(), kappa=1.0)
    expected = math.sqrt(0.147 * 0.21) / 4 * (1 - math.exp(-2))
    assert expected == pytest.approx(0.037980, abs=5e-6)
    assert g(model, 1, 2, 1) == pytest.approx(expected, rel=1e-14)


def test_g_rejects_order_zero_and_bad_degrees():
    model = SpectrumModel(Multiquadric(0.7), Exponential(1.0), kappa=1.0)
    with pytest.raises(ValueError):
        g(model, 0, 1, 1)
    with pytest.raises(ValueError):
        g(model, 2, 1, 3)


def test_kronecker_non_integer_kappa_gives_zero_g():
    model = SpectrumModel(Multiquadric(0.7), Kronecker(), Ones(), kappa=0.5)
    assert all(g(model, 1, n, k) == 0.0 for n in range(1, 6) for k in range(1, 6))
    model = model.replace(kappa=1.0)
    assert g(model, 1, 2, 1) != 0.0


@given(models, indices())
def test_f_symmetric_g_antisymmetric(model, idx):
    m, n, n2 = idx
    assert f(model, m, n, n2) == f(model, m, n2, n)
    if m >= 1:
        assert g(model, m, n, n2) == -g(model, m, n2, n)
        assert g(model, m, n, n) == 0.0


@given(models, indices())
def test_f_cauchy_schwarz(model, idx):
    m, n, n2 = idx
    assert abs(f(model, m, n, n2)) <= math.sqrt(f(model, m, n, n) * f(model, m, n2, n2)) + 1e-12
    assert f(model, m, n, n) >= 0.0


@given(models, indices())
def test_g_odd_in_kappa(model, idx):
    m, n, n2 = idx
    if m >= 1:
        assert g(model, m, n, n2) == pytest.approx(-g(model.replace(kappa=-model.kappa), m, n, n2),
                                                    abs=1e-300)


@given(xis, indices())
def test_isotropy_limit(xi, idx):
    m, n, n2 = idx
    model = SpectrumModel(xi, Kronecker(), Ones())
    expected = xi.values(n)[n] if n == n2 else 0.0
    assert f(model, m, n, n2) == pytest.approx(expected, rel=1e-14)


@given(xis, rhos, st.floats(-2, 2), indices())
def test_longitudinal_independence_limit(xi, rho, kappa, idx):
    m, n, n2 = idx
    model = SpectrumModel(xi, rho, Indicator(0), kappa)
    if m >= 1:
        assert f(model, m, n, n2) == 0.0 and g(model, m, n, n2) == 0.0


@given(models)
def test_matrix_builders_agree_with_scalars(model):
    F, G = fg_matrices(model, 2, 7)
    for i in range(6):
        for j in range(6):
            assert F[i, j] == pytest.approx(f(model, 2, i + 2, j + 2), rel=1e-12, abs=1e-300)
            assert G[i, j] == pytest.approx(g(model, 2, i + 2, j + 2), rel=1e-12, abs=1e-300)
    F0, G0 = fg_matrices(model, 0, 5)
    assert not G0.any()


def test_lag_matrices_shape():
    R, K = lag_matrices(SpectrumModel(Multiquadric(0.5), Exponential(1.0), kappa=1.0), 4)
    assert R.shape == K.shape == (4, 4)
    assert np.allclose(K, -K.T)
    assert np.allclose(np.diag(R), 1.0)


def test_gamma_block_kronecker_is_diagonal():
    model = SpectrumModel(LegendreMatern(100, 1.5), Kronecker(), Indicator(8))
    blk = gamma_block(model, 3, 12)
    assert np.array_equal(blk.F, np.diag(np.diag(blk.F)))
    assert np.allclose(np.diag(blk.F), model.xi.values(12)[3:])
    assert not blk.G.any()
    assert blk.min_eigenvalue >= 0.0
    assert list(blk.degrees) == list(range(3, 13))


def test_gamma_block_example1_irreversible_passes(irreversible):
    blk = gamma_block(irreversible, 1, 20)
    assert blk.matrix.shape == (40, 40)
    assert np.allclose(blk.G, -blk.G.T)
    assert blk.min_eigenvalue >= -1e-10 * blk.mean_diagonal


def test_gamma_block_order_zero_has_no_g(irreversible):
    assert not gamma_block(irreversible, 0, 10).G.any()


def test_gamma_block_rejects_non_psd():
    F = np.diag([1.0, 1e-6])
    G = np.array([[0.0, 0.5], [-0.5, 0.0]])
    with pytest.raises(AdmissibilityError) as err:
        GammaBlock(2, (2, 3), F, G)
    assert err.value.order == 2
    assert err.value.min_eig < 0


def test_gamma_block_rejects_asymmetric_inputs():
    with pytest.raises(ValueError):
        GammaBlock(1, (1, 2), np.array([[1.0, 0.2], [0.1, 1.0]]), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        GammaBlock(1, (1, 2), np.eye(2), np.array([[0.0, 0.1], [0.1, 0.0]]))


def test_gamma_block_needs_degrees():
    with pytest.raises(ValueError):
        gamma_block(SpectrumModel(Multiquadric(0.5)), 5, 4)


def test_check_c4_branches():
    lm = SpectrumModel(LegendreMatern(100, 1.5), Kronecker(), Indicator(8))
    assert check_c4(lm, branch="kronecker").passed
    general = check_c4(lm, branch="general")
    assert not general.passed and general.beta == 4.0
    mq = SpectrumModel(Multiquadric(0.7), Exponential(1.0), kappa=1.0)
    assert check_c4(mq, branch="general").passed and check_c4(mq, branch="kronecker").passed
    assert check_c4(SpectrumModel(LegendreMatern(1, 2.0), Exponential(1.0)), branch="general").passed
    # kronecker branch needs a Kronecker rho
    assert not check_c4(SpectrumModel(LegendreMatern(1, 1.5), Exponential(1.0)),
                        branch="kronecker").passed
    assert general.variance_sum > 0
    assert "FAIL" in str(general)


def test_certificate_verification():
    xi = LegendreMatern(100, 1.5)
    assert DecayCertificate(4.0, 1.0, 1).verify(xi)
    assert not DecayCertificate(4.5, 1.0, 1).verify(xi)
    custom = SpectrumModel(CustomXi(tuple(1.0 / (1 + np.arange(50.0)) ** 5)), Kronecker())
    assert not check_c4(custom).passed  # no certificate supplied
    assert check_c4(custom, DecayCertificate(5.0, 1.0, 1), branch="general").passed
    assert not check_c4(custom, DecayCertificate(6.0, 1.0, 1), branch="general").passed
    with pytest.raises(ValueError):
        DecayCertificate(2.0, 1.0, 1)
