"""Closed-form markup objects for two-sided bargaining between exporters and importers.

Every function here is a pure function of bilateral shares and the structural
parameters: residual demand elasticity, oligopoly markup, oligopsony markdown,
the leverage scalar that converts baseline bargaining power into an effective
weight, and the bilateral markup that combines them. All of them accept scalars
or numpy arrays (broadcasting elementwise) and return the same kind.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

# Below this, the 0/0 expressions switch to a three-term expansion of
# (1 - t)^a; the two branches agree to ~1e-15 at the threshold.
SERIES_THRESHOLD = 1e-6

__all__ = [
    "ModelParams",
    "PairShares",
    "MarkupRecord",
    "residual_demand_elasticity",
    "oligopoly_markup",
    "oligopsony_markdown",
    "leverage_lambda",
    "effective_weight",
    "bilateral_markup",
    "inverse_supply_elasticity",
]


@dataclass(frozen=True)
class ModelParams:
    """Structural parameter vector (rho, eta, theta, phi, gamma, nu).

    rho is the within-product elasticity of substitution, eta the elasticity of
    the foreign-input bundle with respect to its price index, theta the
    returns-to-scale parameter, phi the importer bargaining weight, gamma the
    foreign-input cost share and nu the final-demand elasticity.

    If ``eta`` is left None it is derived as 1 - gamma + nu*gamma; if supplied
    directly it overrides that mapping (gamma and nu are then only needed by
    the consumer-price distortion index). Admissibility: rho > 1, nu > 1,
    0 < theta <= 1, 0 <= phi <= 1, 0 < gamma <= 1, eta > 1 and rho >= eta.
    """

    rho: float = 7.0
    eta: float | None = None
    theta: float = 0.75
    phi: float = 0.5
    gamma: float | None = 1.0
    nu: float | None = 2.5

    def __post_init__(self):
        if not np.isfinite(self.rho) or self.rho <= 1.0:
            raise ValueError(f"rho must be finite and > 1, got {self.rho}")
        if not (0.0 < self.theta <= 1.0):
            raise ValueError(f"theta must be in (0, 1], got {self.theta}")
        if not (0.0 <= self.phi <= 1.0):
            raise ValueError(f"phi must be in [0, 1], got {self.phi}")
        if self.gamma is not None and not (0.0 < self.gamma <= 1.0):
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.nu is not None and not (np.isfinite(self.nu) and self.nu > 1.0):
            raise ValueError(f"nu must be finite and > 1, got {self.nu}")
        if self.eta is None:
            if self.gamma is None or self.nu is None:
                raise ValueError("eta not given: need gamma and nu to derive it")
            object.__setattr__(self, "eta", 1.0 - self.gamma + self.nu * self.gamma)
        if not np.isfinite(self.eta) or self.eta <= 1.0:
            raise ValueError(f"eta must be finite and > 1, got {self.eta}")
        if self.rho < self.eta:
            raise ValueError(f"need rho >= eta, got rho={self.rho}, eta={self.eta}")

    def with_phi(self, phi: float) -> "ModelParams":
        """Copy of the parameters with the bargaining weight replaced."""
        return dataclasses.replace(self, phi=phi)


def _share_array(val, name: str):
    """Validate a share (scalar or array) and clip float dust at the edges."""
    arr = np.asarray(val, dtype=float)
    if arr.size and (np.any(~np.isfinite(arr)) or arr.min() < -1e-12 or arr.max() > 1.0 + 1e-12):
        raise ValueError(f"{name} must lie in [0, 1]")
    return np.clip(arr, 0.0, 1.0)


def _maybe_scalar(arr, scalar: bool):
    return float(arr) if scalar else arr


@dataclass(frozen=True)
class PairShares:
    """Bilateral shares of one exporter-importer pair (scalars or arrays).

    s: the exporter's share of the importer's product-level input expenditure.
    x: the importer's quantity share of the exporter's destination sales.
    x_r: the revenue analogue of x (not needed for markup evaluation).
    """

    s: object
    x: object
    x_r: object = None

    def __post_init__(self):
        object.__setattr__(self, "s", _share_array(self.s, "s"))
        object.__setattr__(self, "x", _share_array(self.x, "x"))
        if self.x_r is not None:
            object.__setattr__(self, "x_r", _share_array(self.x_r, "x_r"))


@dataclass(frozen=True)
class MarkupRecord:
    """Bilateral markup and its components.

    mu = (1 - omega) * mu_olig + omega * mu_oligopsony holds exactly by
    construction; epsilon is the residual demand elasticity, lam the leverage
    scalar (>= 1) and omega the effective bargaining weight.
    """

    mu: object
    mu_olig: object
    mu_oligopsony: object
    epsilon: object
    lam: object
    omega: object


def residual_demand_elasticity(s, p: ModelParams):
    """Demand elasticity faced by an exporter with supplier share s.

    Equals rho at s=0 and eta at s=1, linear in between.
    """
    s_arr = _share_array(s, "s")
    out = p.rho * (1.0 - s_arr) + p.eta * s_arr
    return _maybe_scalar(out, np.isscalar(s) or np.ndim(s) == 0)


def oligopoly_markup(s, p: ModelParams):
    """Markup charged by an exporter facing no buyer power: eps/(eps - 1)."""
    scalar = np.isscalar(s) or np.ndim(s) == 0
    eps = np.asarray(residual_demand_elasticity(s, p))
    if np.any(eps <= 1.0):
        raise ValueError("residual demand elasticity <= 1; markup undefined")
    return _maybe_scalar(eps / (eps - 1.0), scalar)


def oligopsony_markdown(x, p: ModelParams):
    """Price/marginal-cost ratio under full buyer power.

    theta * (1 - (1 - x)^(1/theta)) / x, continuously extended to 1 at x=0;
    lies in [theta, 1], nonincreasing in x, identically 1 at theta=1.
    """
    scalar = np.isscalar(x) or np.ndim(x) == 0
    x_arr = np.atleast_1d(_share_array(x, "x"))
    if p.theta == 1.0:  # constant returns: marginal equals average cost
        return _maybe_scalar(np.ones(np.shape(_share_array(x, "x"))), scalar)
    a = 1.0 / p.theta

    out = np.empty_like(x_arr)
    at_one = x_arr >= 1.0
    small = (~at_one) & (x_arr < SERIES_THRESHOLD)
    mid = ~(at_one | small)

    out[at_one] = p.theta
    xs = x_arr[small]
    out[small] = 1.0 - (a - 1.0) * xs / 2.0 + (a - 1.0) * (a - 2.0) * xs * xs / 6.0
    xm = x_arr[mid]
    # 1 - (1-x)^a via expm1/log1p keeps full relative precision for small x
    out[mid] = p.theta * (-np.expm1(a * np.log1p(-xm))) / xm

    out = out.reshape(np.shape(_share_array(x, "x")))
    return _maybe_scalar(out, scalar)


def leverage_lambda(s, p: ModelParams):
    """Leverage scalar translating the supplier share into bargaining traction.

    Hump-shaped in s with value 1 at both s=0 and s=1 (s=1 is evaluated
    analytically; near zero a series expansion of (1-s)^b avoids the 0/0).
    """
    scalar = np.isscalar(s) or np.ndim(s) == 0
    s_arr = np.atleast_1d(_share_array(s, "s"))
    b = (p.eta - 1.0) / (p.rho - 1.0)

    ratio = np.empty_like(s_arr)  # s / (1 - (1-s)^b)
    at_one = s_arr >= 1.0
    small = (~at_one) & (s_arr < SERIES_THRESHOLD)
    mid = ~(at_one | small)

    ratio[at_one] = 1.0
    ss = s_arr[small]
    ratio[small] = 1.0 / (b * (1.0 - (b - 1.0) * ss / 2.0 + (b - 1.0) * (b - 2.0) * ss * ss / 6.0))
    sm = s_arr[mid]
    ratio[mid] = sm / (-np.expm1(b * np.log1p(-sm)))

    eps = p.rho * (1.0 - s_arr) + p.eta * s_arr
    lam = ratio * (p.eta - 1.0) / (eps - 1.0)
    lam[at_one] = 1.0

    lam = lam.reshape(np.shape(_share_array(s, "s")))
    return _maybe_scalar(lam, scalar)


def _omega_from_lambda(lam, phi: float):
    # algebraically phi*lam / (1 - phi + phi*lam); exact at phi in {0, 1}
    if phi == 0.0:
        return np.zeros_like(np.asarray(lam, dtype=float))
    if phi == 1.0:
        return np.ones_like(np.asarray(lam, dtype=float))
    return phi * lam / (1.0 - phi + phi * lam)


def effective_weight(s, p: ModelParams):
    """Effective importer bargaining weight omega in [phi, 1]."""
    scalar = np.isscalar(s) or np.ndim(s) == 0
    lam = np.asarray(leverage_lambda(s, p))
    return _maybe_scalar(_omega_from_lambda(lam, p.phi), scalar)


def bilateral_markup(shares: PairShares, p: ModelParams) -> MarkupRecord:
    """Full bilateral markup record for a pair (or arrays of pairs).

    The markup is the omega-weighted average of the oligopoly markup at the
    supplier share and the oligopsony markdown at the buyer share.
    """
    scalar = np.ndim(shares.s) == 0 and np.ndim(shares.x) == 0
    s_arr, x_arr = np.broadcast_arrays(np.asarray(shares.s), np.asarray(shares.x))

    eps = np.asarray(residual_demand_elasticity(s_arr, p))
    mu_olig = np.asarray(oligopoly_markup(s_arr, p))
    mu_opsony = np.asarray(oligopsony_markdown(x_arr, p))
    lam = np.asarray(leverage_lambda(s_arr, p))
    omega = _omega_from_lambda(lam, p.phi)
    mu = (1.0 - omega) * mu_olig + omega * mu_opsony

    if scalar:
        return MarkupRecord(float(mu), float(mu_olig), float(mu_opsony),
                            float(eps), float(lam), float(omega))
    return MarkupRecord(mu, mu_olig, mu_opsony, eps, lam, omega)


def inverse_supply_elasticity(x, p: ModelParams):
    """Inverse residual supply elasticity faced by a buyer: (1-theta)/theta * x."""
    scalar = np.isscalar(x) or np.ndim(x) == 0
    x_arr = _share_array(x, "x")
    return _maybe_scalar((1.0 - p.theta) / p.theta * x_arr, scalar)
