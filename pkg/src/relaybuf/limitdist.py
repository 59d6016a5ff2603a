"""Limiting (stationary) law of the relay's primary energy buffer.

Best-effort buffers (draw ``min(B, M)`` on every NACK) settle to an
exponential law with rate ``z1``; on-off buffers (draw ``M`` or stay silent)
settle to a two-piece density with rate ``q = -z1``. Both exist only when the
stability factor ``phi = M * lambda_eff`` exceeds one.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StabilityError
from .params import BufferPolicy, DerivedConstants
from .special import lambert_w0


class StabilityClass(str, enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"


class NearCriticalWarning(RuntimeWarning):
    """phi is so close to 1 that the decay rate has lost most of its digits."""


NEAR_CRITICAL = 1e-8


def classify(constants: DerivedConstants) -> StabilityClass:
    """Stable iff ``phi > 1``; critical balance ``phi == 1`` counts as unstable."""
    return StabilityClass.STABLE if constants.phi > 1.0 else StabilityClass.UNSTABLE


def _require_stable(constants: DerivedConstants) -> None:
    if classify(constants) is not StabilityClass.STABLE:
        raise StabilityError(
            f"limiting distribution does not exist for phi={constants.phi:.6g} <= 1")


def normalized_rate(phi: float) -> float:
    """``z1 * M = W(-phi e^-phi) + phi``, the positive root of ``y = phi (1 - e^-y)``."""
    if phi - 1.0 <= NEAR_CRITICAL:
        warnings.warn(f"phi={phi!r} is within {NEAR_CRITICAL:g} of critical balance; "
                      "the buffer decay rate is numerically unreliable", NearCriticalWarning,
                      stacklevel=3)
    return lambert_w0(-phi * math.exp(-phi)) + phi


def ibep_rate(constants: DerivedConstants) -> float:
    """Exponential rate ``z1`` of the best-effort buffer law."""
    _require_stable(constants)
    return normalized_rate(constants.phi) / constants.m_draw


def iofp_rate(constants: DerivedConstants) -> float:
    """Rate ``q < 0`` of the on-off buffer density; the exact negative of ``z1``."""
    return -ibep_rate(constants)


def fixed_point_residual(rate: float, constants: DerivedConstants) -> float:
    """Residual of ``lambda_eff * exp(-rate M) = lambda_eff - rate``.

    Zero (to rounding) for ``rate = z1``; ``q`` satisfies the same equation
    with ``rate = -q``.
    """
    lam = constants.lambda_eff
    return lam * math.exp(-rate * constants.m_draw) - lam + rate


@dataclass(frozen=True)
class LimitingDistribution:
    policy: BufferPolicy
    m_draw: float
    lambda_eff: float
    stability: StabilityClass
    z1: float | None = None
    q: float | None = None

    @property
    def phi(self) -> float:
        return self.m_draw * self.lambda_eff

    @property
    def stable(self) -> bool:
        return self.stability is StabilityClass.STABLE

    def _check(self, policy, x):
        if self.policy is not policy:
            raise DomainError(f"distribution is {self.policy.value}, not {policy.value}")
        if not self.stable:
            raise StabilityError("buffer is unstable; no limiting distribution")
        x = np.asarray(x, dtype=float)
        if np.any(x < 0) or np.any(np.isnan(x)):
            raise DomainError("buffer energy must be non-negative")
        return x

    def cdf(self, x):
        return ibep_cdf(self, x) if self.policy is BufferPolicy.IBEP else iofp_cdf(self, x)

    def pdf(self, x):
        return ibep_pdf(self, x) if self.policy is BufferPolicy.IBEP else iofp_pdf(self, x)

    def quantile_upper(self, tail: float) -> float:
        """Energy level exceeded with probability ``tail`` (for plotting ranges)."""
        if self.policy is BufferPolicy.IBEP:
            return -math.log(tail) / self.z1
        # tail beyond M is (1/phi) e^{q (x - M)}
        return self.m_draw + max(0.0, math.log(tail * self.phi) / self.q)


def limiting_distribution(constants: DerivedConstants, policy) -> LimitingDistribution:
    policy = BufferPolicy(policy)
    stab = classify(constants)
    z1 = q = None
    if stab is StabilityClass.STABLE:
        rate = ibep_rate(constants)
        if policy is BufferPolicy.IBEP:
            z1 = rate
        else:
            q = -rate
    return LimitingDistribution(policy=policy, m_draw=constants.m_draw,
                                lambda_eff=constants.lambda_eff, stability=stab, z1=z1, q=q)


def _out(v, like):
    return float(v) if np.ndim(like) == 0 else v


def ibep_cdf(dist: LimitingDistribution, x):
    x = dist._check(BufferPolicy.IBEP, x)
    return _out(-np.expm1(-dist.z1 * x), x)


def ibep_pdf(dist: LimitingDistribution, x):
    x = dist._check(BufferPolicy.IBEP, x)
    return _out(dist.z1 * np.exp(-dist.z1 * x), x)


def iofp_pdf(dist: LimitingDistribution, x):
    """``(1 - e^{qx})/M`` below ``M`` and ``-q e^{qx} / (M (q + lambda_eff))`` above.

    The tail is evaluated as ``-q e^{q(x - M)} / (M lambda_eff)``, equal by the
    fixed point ``lambda_eff e^{qM} = q + lambda_eff`` but free of the
    cancellation in ``q + lambda_eff`` at large ``phi``.
    """
    x = dist._check(BufferPolicy.IOFP, x)
    q, m, lam = dist.q, dist.m_draw, dist.lambda_eff
    below = -np.expm1(q * x) / m
    above = -q * np.exp(q * (x - m)) / (m * lam)
    return _out(np.where(x < m, below, above), x)


def iofp_cdf(dist: LimitingDistribution, x):
    """Closed-form antiderivative of :func:`iofp_pdf`.

    Below ``M``: ``(x - (e^{qx} - 1)/q) / M``. Above ``M`` the tail mass is
    ``e^{qx} / (M (q + lambda_eff))``, which equals ``1/phi`` at ``x = M``
    because ``lambda_eff e^{qM} = q + lambda_eff``; it is evaluated as
    ``e^{q(x - M)} / phi``.
    """
    x = dist._check(BufferPolicy.IOFP, x)
    q, m = dist.q, dist.m_draw
    below = (x - np.expm1(q * x) / q) / m
    above = 1.0 - np.exp(q * (x - m)) / dist.phi
    return _out(np.where(x < m, below, above), x)


def iofp_prob_buffer_full(dist: LimitingDistribution) -> float:
    """``Pr{B >= M} = 1/phi`` for a stable on-off buffer."""
    if dist.policy is not BufferPolicy.IOFP:
        raise DomainError("buffer-full probability is defined for the on-off policy")
    if not dist.stable:
        raise StabilityError("buffer is unstable; no limiting distribution")
    return 1.0 / dist.phi


def prob_draw_available(dist: LimitingDistribution) -> float:
    """``Pr{B >= M}`` for either policy (1 for unstable buffers)."""
    if not dist.stable:
        return 1.0
    if dist.policy is BufferPolicy.IBEP:
        return math.exp(-dist.z1 * dist.m_draw)
    return 1.0 / dist.phi
