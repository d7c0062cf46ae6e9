"""Pipe friction constants and pressure-loss models.

Four models of the squared-pressure drop along a pipe, all taking mass flow
in kg/s and returning Pa^2:

* ``phi_hppc``  -- piecewise laminar/turbulent reference (implicit friction
  factor, jump at the regime boundary); the accuracy yardstick.
* ``phi_sqrt``  -- twice-differentiable square-root smoothing, tuned to the
  reference asymptotically and at zero flow.
* ``phi_fs``    -- smoothing that replaces ``|q|`` with the sum of the
  directional flow parts; same tuning targets, simpler algebra.
* ``phi_pkr``   -- rough-pipe limit, a signed quadratic.

The fs and PKr models exist in a discrete form over the flow split
``(beta, gamma)`` and a continuous form over ``(beta, q)``; at any
complementary point (``beta = max(q, 0)``, ``gamma = max(-q, 0)``) the two
forms coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

from .errors import DataError
from .network import DerivedConstants, PipeGeometry

RE_LAMINAR_MAX = 2320.0  # Reynolds number at the laminar/turbulent boundary
PA2_PER_BAR2 = 1e10

Variant = Literal["discrete", "continuous"]
LossModel = Literal["hppc", "sqrt", "fs", "pkr"]
LOSS_MODELS: tuple[str, ...] = ("hppc", "sqrt", "fs", "pkr")


@dataclass(frozen=True)
class FlowPoint:
    """Signed mass flow with optional directional split (all kg/s)."""

    q: float
    beta: float | None = None
    gamma: float | None = None

    @staticmethod
    def from_flow(q: float) -> "FlowPoint":
        """Complementary split: beta carries forward flow, gamma backward."""
        return FlowPoint(q=q, beta=max(q, 0.0), gamma=max(-q, 0.0))


@dataclass(frozen=True)
class PipeLossParams:
    """Per-pipe constants for every pressure-loss model.

    ``omega`` bundles gas state and pipe geometry; ``Lambda`` is its
    rough-pipe scaling.  The hatted constants tune the square-root model,
    the double-dotted ones tune the flow-splitting model.  ``e_hat`` is the
    positive root of the tuning quadratic and is independent of pipe length
    (``omega/Lambda`` depends only on relative roughness).
    """

    diameter: float  # m
    area: float  # m2
    length: float  # m
    roughness: float  # m
    eta: float  # kg/(m s)
    omega: float  # 1/(m2 s2)
    Lambda: float  # omega * (2 log10 rho)^-2
    rho: float  # relative roughness k / (3.71 D)
    alpha: float  # 2.51 A eta / D
    t: float  # 2 alpha / (rho ln 10)
    a_hat: float  # 2 t
    b_hat: float  # (ln rho + 1) t^2 - e_hat^2 / 2
    e_hat: float  # positive quadratic root
    d_hat: float  # = e_hat
    e_hat_negative: float  # companion (negative) quadratic root
    a_dd: float  # = a_hat
    b_dd: float  # b_hat + e_hat^2 / 2
    d_dd: float  # first-derivative matching constant
    laminar_slope: float  # 64 eta A omega / D, slope of the reference at 0
    q_turb: float  # kg/s, mass flow at the laminar/turbulent boundary


def derive_pipe_params(
    geom: PipeGeometry, consts: DerivedConstants
) -> PipeLossParams:
    """Compute all friction and smoothing constants for one pipe.

    Raises:
        DataError: if the relative roughness is >= 1 or the tuning
            quadratic degenerates (impossible for physical data).
    """
    geom.validate("pipe")
    eta = consts.eta
    D, A, L, k = geom.diameter, geom.area, geom.length, geom.roughness
    omega = consts.R_sm * consts.z_m * consts.T_m * L / (A * A * D)
    rho = k / (3.71 * D)
    Lambda = omega / (2.0 * math.log10(rho)) ** 2
    alpha = 2.51 * A * eta / D
    t = 2.0 * alpha / (rho * math.log(10.0))
    a_hat = 2.0 * t
    laminar_slope = 64.0 * eta * A * omega / D

    # Positive root of  e^2/2 + (a_hat - slope/Lambda) e + (ln rho + 1) t^2 = 0,
    # via the cancellation-free quadratic formula.
    b = a_hat - laminar_slope / Lambda  # == a_hat - 64 eta A omega / (D Lambda)
    c = (math.log(rho) + 1.0) * t * t
    disc = b * b - 2.0 * c
    if disc <= 0.0 or c >= 0.0:
        raise DataError(
            "smoothing quadratic has no sign-split real roots; "
            f"relative roughness {k / D!r} outside the physical range"
        )
    s = math.sqrt(disc)
    q_half = -(b + math.copysign(s, b)) / 2.0
    r1 = 2.0 * q_half  # q_half / a with a = 1/2
    r2 = c / q_half
    e_hat, e_neg = (r1, r2) if r1 > 0 else (r2, r1)
    if e_hat <= 0.0 or e_neg >= 0.0:
        raise DataError("smoothing quadratic roots did not split in sign")

    b_hat = c - e_hat * e_hat / 2.0
    b_dd = b_hat + e_hat * e_hat / 2.0
    # d_dd is positive for realistic relative roughness (below roughly 1e-2);
    # beyond that the flow-splitting model is ill-posed and its use is
    # rejected at model-build time, but the constants remain computable.
    d_dd = (D * Lambda / (64.0 * eta * A * omega - 2.0 * t * D * Lambda)) * b_dd

    return PipeLossParams(
        diameter=D,
        area=A,
        length=L,
        roughness=k,
        eta=eta,
        omega=omega,
        Lambda=Lambda,
        rho=rho,
        alpha=alpha,
        t=t,
        a_hat=a_hat,
        b_hat=b_hat,
        e_hat=e_hat,
        d_hat=e_hat,
        e_hat_negative=e_neg,
        a_dd=a_hat,
        b_dd=b_dd,
        d_dd=d_dd,
        laminar_slope=laminar_slope,
        q_turb=RE_LAMINAR_MAX * A * eta / D,
    )


def reynolds(params: PipeLossParams, q: float) -> float:
    """Reynolds number for mass flow ``q`` in kg/s."""
    return params.diameter * abs(q) / (params.area * params.eta)


def colebrook_lambda(
    Re: float, rho: float, tol: float = 1e-12, max_iter: int = 100
) -> float:
    """Turbulent friction factor: solve ``1/sqrt(l) = -2 log10(2.51/(Re sqrt(l)) + rho)``.

    Newton iteration in ``x = 1/sqrt(l)`` from the explicit starting guess
    ``x0 = -2 log10(rho + 6.81 / Re^0.9)``, safeguarded by the bracket
    ``(0, -2 log10 rho)`` on which the residual is monotone.
    """
    if Re <= 0.0:
        raise DataError("Reynolds number must be positive")
    if not 0.0 < rho < 1.0:
        raise DataError(f"relative roughness parameter out of range: {rho}")
    coeff = 2.51 / Re
    two_over_ln10 = 2.0 / math.log(10.0)

    def residual(x: float) -> float:
        return x + 2.0 * math.log10(coeff * x + rho)

    lo, hi = 0.0, -2.0 * math.log10(rho)
    x = min(max(-2.0 * math.log10(rho + 6.81 / Re**0.9), 1e-12), hi)
    for _ in range(max_iter):
        f = residual(x)
        if abs(f) < tol:
            return 1.0 / (x * x)
        if f > 0.0:
            hi = x
        else:
            lo = x
        deriv = 1.0 + two_over_ln10 * coeff / (coeff * x + rho)
        step = x - f / deriv
        x = step if lo < step < hi else 0.5 * (lo + hi)
    raise DataError(f"friction factor iteration did not converge (Re={Re}, rho={rho})")


def pkr_lambda(rho: float) -> float:
    """Rough-pipe limit of the friction factor, ``(2 log10 rho)^-2``."""
    return 1.0 / (2.0 * math.log10(rho)) ** 2


def phi_hppc(params: PipeLossParams, q: float) -> float:
    """Reference pressure loss (Pa^2) for mass flow ``q`` (kg/s), any sign.

    Piecewise: linear below the laminar/turbulent boundary, implicit
    friction factor above it.  Odd in ``q`` by construction.
    """
    if q == 0.0:
        return 0.0
    Re = reynolds(params, q)
    if Re <= RE_LAMINAR_MAX:
        return params.laminar_slope * q
    lam = colebrook_lambda(Re, params.rho)
    return params.omega * lam * abs(q) * q


def phi_sqrt(params: PipeLossParams, q: float) -> float:
    """Square-root smoothed pressure loss (Pa^2) for mass flow ``q`` (kg/s)."""
    root_e = math.sqrt(q * q + params.e_hat * params.e_hat)
    root_d = math.sqrt(q * q + params.d_hat * params.d_hat)
    return params.Lambda * (root_e + params.a_hat + params.b_hat / root_d) * q


def phi_fs(params: PipeLossParams, point: FlowPoint, variant: Variant) -> float:
    """Flow-splitting pressure loss (Pa^2).

    The discrete variant reads ``(beta, gamma)``; the continuous variant
    reads ``(beta, q)`` with the backward part expressed as ``beta - q``.
    """
    if variant == "discrete":
        if point.beta is None or point.gamma is None:
            raise DataError("discrete flow-splitting loss needs beta and gamma")
        beta, gamma = point.beta, point.gamma
        denom = beta + gamma + params.d_dd
        if denom <= 0.0:
            raise DataError("non-positive flow-splitting denominator")
        return params.Lambda * (
            beta * beta
            - gamma * gamma
            + params.a_dd * (beta - gamma)
            + params.b_dd * (beta - gamma) / denom
        )
    if variant == "continuous":
        if point.beta is None:
            raise DataError("continuous flow-splitting loss needs beta")
        beta, q = point.beta, point.q
        denom = 2.0 * beta - q + params.d_dd
        if denom <= 0.0:
            raise DataError("non-positive flow-splitting denominator")
        return params.Lambda * (
            (2.0 * beta + params.a_dd) * q - q * q + params.b_dd * q / denom
        )
    raise DataError(f"unknown variant {variant!r}")


def phi_pkr(params: PipeLossParams, point: FlowPoint, variant: Variant) -> float:
    """Rough-pipe-limit pressure loss (Pa^2); a signed quadratic in the flow."""
    if variant == "discrete":
        if point.beta is None or point.gamma is None:
            raise DataError("discrete rough-pipe loss needs beta and gamma")
        return params.Lambda * (point.beta * point.beta - point.gamma * point.gamma)
    if variant == "continuous":
        if point.beta is None:
            raise DataError("continuous rough-pipe loss needs beta")
        return params.Lambda * (2.0 * point.beta * point.q - point.q * point.q)
    raise DataError(f"unknown variant {variant!r}")


def phi(params: PipeLossParams, model: LossModel, q: float) -> float:
    """Evaluate any loss model at the complementary split of mass flow ``q``."""
    if model == "hppc":
        return phi_hppc(params, q)
    if model == "sqrt":
        return phi_sqrt(params, q)
    point = FlowPoint.from_flow(q)
    if model == "fs":
        return phi_fs(params, point, "discrete")
    if model == "pkr":
        return phi_pkr(params, point, "discrete")
    raise DataError(f"unknown pressure-loss model {model!r}")


def phi_bar2(
    params: PipeLossParams, model: LossModel, q_volumetric: float, rho_norm: float
) -> float:
    """Loss in Bar^2 for a volumetric flow in m3/s (mass conversion included)."""
    return phi(params, model, rho_norm * q_volumetric) / PA2_PER_BAR2


def sample_curves(
    params: PipeLossParams, q_grid: list[float]
) -> list[tuple[float, float, float, float, float]]:
    """Tabulate all four models on a mass-flow grid (kg/s in, Pa^2 out).

    Rows are ``(q, hppc, sqrt, fs, pkr)`` with the discrete fs/PKr models
    evaluated at the complementary split of each grid point.
    """
    rows = []
    for q in q_grid:
        point = FlowPoint.from_flow(q)
        rows.append(
            (
                q,
                phi_hppc(params, q),
                phi_sqrt(params, q),
                phi_fs(params, point, "discrete"),
                phi_pkr(params, point, "discrete"),
            )
        )
    return rows
