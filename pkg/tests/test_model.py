"""Unit tests for the closed-form markup objects."""

import numpy as np
import pytest

from bilopoly.model import (
    SERIES_THRESHOLD,
    MarkupRecord,
    ModelParams,
    PairShares,
    bilateral_markup,
    effective_weight,
    inverse_supply_elasticity,
    leverage_lambda,
    oligopoly_markup,
    oligopsony_markdown,
    residual_demand_elasticity,
)

CAL = ModelParams()  # rho=7, eta=2.5, theta=0.75, phi=0.5


def test_params_eta_derivation_and_defaults():
    p = ModelParams()
    assert p.eta == 2.5  # 1 - gamma + nu*gamma with gamma=1, nu=2.5
    assert p.rho == 7.0 and p.theta == 0.75
    p2 = ModelParams(eta=3.0, gamma=0.4, nu=2.0)
    assert p2.eta == 3.0  # explicit eta wins over (gamma, nu)


@pytest.mark.parametrize("kwargs", [
    dict(rho=1.0),
    dict(rho=0.5),
    dict(theta=0.0),
    dict(theta=1.5),
    dict(phi=-0.1),
    dict(phi=1.1),
    dict(gamma=0.0),
    dict(gamma=1.2),
    dict(nu=1.0),
    dict(eta=1.0),          # eta must exceed 1
    dict(eta=0.9),
    dict(rho=2.0, eta=2.5),  # rho >= eta required
    dict(eta=None, gamma=None),
])
def test_params_rejects_inadmissible(kwargs):
    with pytest.raises(ValueError):
        ModelParams(**{**dict(rho=7.0, eta=2.5, theta=0.75, phi=0.5), **kwargs})


def test_residual_demand_elasticity_values():
    assert residual_demand_elasticity(0.0, CAL) == 7.0
    assert residual_demand_elasticity(1.0, CAL) == 2.5
    assert residual_demand_elasticity(0.5, CAL) == pytest.approx(4.75, abs=1e-15)


def test_oligopoly_markup_values():
    assert oligopoly_markup(0.0, CAL) == pytest.approx(7.0 / 6.0, abs=1e-15)
    assert oligopoly_markup(1.0, CAL) == pytest.approx(2.5 / 1.5, abs=1e-15)
    assert oligopoly_markup(0.5, CAL) == pytest.approx(4.75 / 3.75, abs=1e-15)


def test_oligopsony_markdown_values():
    assert oligopsony_markdown(1.0, CAL) == 0.75
    assert oligopsony_markdown(0.0, CAL) == 1.0
    # frozen from a 40-digit evaluation of theta*(1 - 0.5^(4/3))/0.5
    assert oligopsony_markdown(0.5, CAL) == pytest.approx(0.9047246055119252, abs=1e-14)


def test_markdown_identically_one_at_theta_one():
    p = ModelParams(theta=1.0)
    x = np.linspace(0.0, 1.0, 101)
    assert np.all(oligopsony_markdown(x, p) == 1.0)


def test_leverage_lambda_limits_and_value():
    assert leverage_lambda(1.0, CAL) == 1.0
    assert abs(leverage_lambda(0.0, CAL) - 1.0) < 1e-12
    assert abs(leverage_lambda(1e-8, CAL) - 1.0) < 1e-6
    # frozen from a 40-digit evaluation of the closed form at s=0.5
    assert leverage_lambda(0.5, CAL) == pytest.approx(1.257042701576649, abs=1e-13)
    assert leverage_lambda(0.5, CAL) >= 1.0


def test_leverage_lambda_hump_shape():
    s = np.linspace(0.0, 1.0, 1001)
    lam = leverage_lambda(s, CAL)
    assert np.all(lam >= 1.0 - 1e-12)
    # single interior maximum: the sign of the discrete difference flips once
    d = np.diff(lam)
    signs = np.sign(d[np.abs(d) > 1e-14])
    flips = np.sum(signs[1:] != signs[:-1])
    assert flips == 1


def test_lambda_degenerate_rho_equals_eta():
    p = ModelParams(rho=2.5, eta=2.5)
    s = np.linspace(0.0, 1.0, 101)
    assert np.allclose(leverage_lambda(s, p), 1.0, atol=1e-12)
    mu = oligopoly_markup(s, p)
    assert np.allclose(mu, 2.5 / 1.5, atol=1e-12)


def test_effective_weight_limits():
    assert effective_weight(0.3, CAL.with_phi(0.0)) == 0.0
    assert effective_weight(0.3, CAL.with_phi(1.0)) == 1.0
    # lambda = 1 at s=0, so omega = phi exactly
    assert effective_weight(0.0, CAL.with_phi(0.5)) == pytest.approx(0.5, abs=1e-15)
    s = np.linspace(0.0, 1.0, 201)
    for phi in (0.1, 0.5, 0.9):
        om = effective_weight(s, CAL.with_phi(phi))
        assert np.all(om >= phi - 1e-12) and np.all(om <= 1.0 + 1e-12)


def test_monotonicity_on_grid():
    s = np.linspace(0.0, 1.0, 1000)
    mu = oligopoly_markup(s, CAL)
    assert np.all(np.diff(mu) >= -1e-15)
    md = oligopsony_markdown(s, CAL)
    assert np.all(np.diff(md) <= 1e-15)


def test_bounds_on_grid():
    s = np.linspace(0.0, 1.0, 1000)
    mu = oligopoly_markup(s, CAL)
    assert mu.min() >= 7.0 / 6.0 - 1e-12 and mu.max() <= 2.5 / 1.5 + 1e-12
    md = oligopsony_markdown(s, CAL)
    assert md.min() >= 0.75 - 1e-12 and md.max() <= 1.0 + 1e-12


def test_series_switchover_continuity():
    # compare the series branch against the expm1/log1p closed form at the
    # threshold itself, for both expressions that use the expansion
    for theta in (0.3, 0.5, 0.75, 0.9):
        p = ModelParams(theta=theta)
        a = 1.0 / theta
        t = SERIES_THRESHOLD
        series = 1.0 - (a - 1.0) * t / 2.0 + (a - 1.0) * (a - 2.0) * t * t / 6.0
        closed = theta * (-np.expm1(a * np.log1p(-t))) / t
        assert abs(series - closed) < 1e-10
    for rho, eta in ((7.0, 2.5), (4.0, 1.5), (10.0, 9.0)):
        b = (eta - 1.0) / (rho - 1.0)
        t = SERIES_THRESHOLD
        series = 1.0 / (b * (1.0 - (b - 1.0) * t / 2.0 + (b - 1.0) * (b - 2.0) * t * t / 6.0))
        closed = t / (-np.expm1(b * np.log1p(-t)))
        assert abs(series - closed) < 1e-10
    # the seam itself is smooth
    p = CAL
    below = oligopsony_markdown(SERIES_THRESHOLD * (1 - 1e-9), p)
    above = oligopsony_markdown(SERIES_THRESHOLD * (1 + 1e-9), p)
    assert abs(below - above) < 1e-10


def test_bilateral_markup_record():
    rec = bilateral_markup(PairShares(0.0, 0.0), CAL.with_phi(0.5))
    assert rec.mu == pytest.approx(13.0 / 12.0, abs=1e-14)  # 0.5*(7/6) + 0.5*1
    rec = bilateral_markup(PairShares(0.3, 0.9), CAL.with_phi(0.0))
    assert rec.mu == oligopoly_markup(0.3, CAL)
    assert rec.omega == 0.0
    rec = bilateral_markup(PairShares(0.7, 0.4), CAL.with_phi(1.0))
    assert rec.mu == oligopsony_markdown(0.4, CAL)
    assert rec.omega == 1.0


def test_markup_identity_on_random_draws():
    rng = np.random.default_rng(7)
    s = rng.uniform(0.0, 1.0, 2000)
    x = rng.uniform(0.0, 1.0, 2000)
    for phi in (0.0, 0.25, 0.5, 0.9, 1.0):
        rec = bilateral_markup(PairShares(s, x), CAL.with_phi(phi))
        lhs = rec.mu - ((1.0 - rec.omega) * rec.mu_olig + rec.omega * rec.mu_oligopsony)
        assert np.max(np.abs(lhs)) == 0.0  # exact by construction
        eps = residual_demand_elasticity(s, CAL)
        assert np.allclose(rec.epsilon, eps, atol=0.0)


def test_vectorized_matches_scalar():
    s = np.array([0.0, 1e-9, 1e-6, 0.2, 0.5, 0.99, 1.0])
    vec = leverage_lambda(s, CAL)
    scal = np.array([leverage_lambda(float(v), CAL) for v in s])
    assert np.array_equal(vec, scal)
    vec = oligopsony_markdown(s, CAL)
    scal = np.array([oligopsony_markdown(float(v), CAL) for v in s])
    assert np.array_equal(vec, scal)


def test_inverse_supply_elasticity():
    assert inverse_supply_elasticity(1.0, CAL) == pytest.approx(1.0 / 3.0, abs=1e-15)
    assert inverse_supply_elasticity(0.6, ModelParams(theta=1.0)) == 0.0
    assert inverse_supply_elasticity(0.5, ModelParams(theta=0.5)) == pytest.approx(0.5)


def test_share_domain_errors():
    with pytest.raises(ValueError):
        oligopoly_markup(1.5, CAL)
    with pytest.raises(ValueError):
        oligopsony_markdown(-0.2, CAL)
    with pytest.raises(ValueError):
        PairShares(0.5, np.nan)
