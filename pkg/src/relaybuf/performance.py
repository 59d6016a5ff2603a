"""Outage probability, throughput and diversity of every relaying scheme.

Outage of a relayed scheme is evaluated in its joint form

    P_out = Pr{SR fails} Pr{NACK} + Pr{SR ok} Pr{gamma_RD + gamma_SD < Gamma}

where the second factor is averaged over the relay's transmit energy (the
buffer's limiting law for HSU schemes, the harvest itself for HU). For the
buffer-averaged factor we integrate ``Pr{x Psi + gamma_SD < Gamma}`` from
:func:`relaybuf.special.hypoexp_cdf` against the buffer density, rather than
summing the printed closed form term by term: the closed form's terms are
``O(1/SNR)`` and cancel to an ``O(1/SNR^2)`` result at high SNR. The printed
form (with the integral ``I_HSU``) is kept in :func:`outage_hsu_ibep_literal`
for cross-checking.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ConsistencyError, DomainError
from .limitdist import (BufferPolicy, LimitingDistribution, StabilityClass, classify,
                        limiting_distribution)
from .params import DerivedConstants, PolicyKind, SystemParams, derive_constants
from .special import Quadrature, adaptive_simpson, exprel, hypoexp_cdf

# tolerances for the buffer-averaged failure probability
_QUAD_REL = 1e-11
_QUAD_ABS = 1e-300
# HU truncation point lambda * x_max (tail/estimate <= e^{-30})
_HU_TAIL_DECADES = 30.0


@dataclass(frozen=True)
class OutageResult:
    p_out: float
    pr_nack: float
    components: dict = field(default_factory=dict)
    quad_error: float = 0.0


@dataclass(frozen=True)
class AsymptoteModel:
    """High-SNR outage model ``k2/snr**order_low + k1/snr**2`` (``k0`` for IBEP)."""

    policy: BufferPolicy
    order: int
    k0: float | None = None
    k1: float | None = None
    k2: float | None = None

    def __call__(self, snr):
        snr = np.asarray(snr, dtype=float)
        if self.policy is BufferPolicy.IBEP:
            v = self.k0 / snr ** 2
        else:
            v = self.k1 / snr ** 2 + self.k2 / snr
        return float(v) if v.ndim == 0 else v


# --- building blocks -----------------------------------------------------------

def pair_term_literal(w1: float, w2: float, gamma: float) -> float:
    """``(1 - e^{-W2 G}) + W2 (e^{-W1 G} - e^{-W2 G}) / (W1 - W2)`` as printed.

    At ``W1 == W2`` the quotient is replaced by its limit ``-W2 G e^{-W2 G}``.
    """
    base = -math.expm1(-w2 * gamma)
    if w1 == w2:
        return base - w2 * gamma * math.exp(-w2 * gamma)
    return base + w2 * (math.exp(-w1 * gamma) - math.exp(-w2 * gamma)) / (w1 - w2)


def full_draw_failure(c: DerivedConstants) -> float:
    """``Pr{gamma_SD + 2 M |h_RD|^2 / sigma^2 < Gamma}`` (relay draws exactly M)."""
    return hypoexp_cdf(c.w2 * c.gamma_th, c.w1 * c.gamma_th)


def sr_failure(c: DerivedConstants) -> float:
    return -math.expm1(-c.w4 * c.gamma_th)


def _relay_singularity(c: DerivedConstants, scale: float) -> float:
    """Energy ``x*`` where the relay and direct SNR rates coincide."""
    return scale * c.w3 / c.w2


def _split(points, lo, hi):
    return tuple(sorted({p for p in points if lo < p < hi and math.isfinite(p)}))


def _integrate_log(f, hi: float, scale: float, points=()):
    """Integrate ``f`` over ``[0, hi]``, in ``u = log x`` above ``x0``.

    The conditional failure probability changes on the scale ``scale``
    (``W3 Gamma``), which at high SNR lies many decades below ``hi``; in log
    coordinates every decade gets comparable resolution. ``[0, x0]`` with
    ``x0 = 1e-3 scale`` is integrated directly.
    """
    x0 = min(1e-3 * scale, 0.5 * hi)
    q0 = Quadrature(abs_tol=_QUAD_ABS, rel_tol=_QUAD_REL)
    v0, e0 = adaptive_simpson(f, 0.0, x0, q0)
    u0, u1 = math.log(x0), math.log(hi)
    upts = [math.log(p) for p in points if x0 < p < hi]

    def g(u):
        x = np.exp(u)
        return f(x) * x

    q1 = Quadrature(abs_tol=_QUAD_ABS, rel_tol=_QUAD_REL, split_points=_split(upts, u0, u1))
    v1, e1 = adaptive_simpson(g, u0, u1, q1)
    return v0 + v1, e0 + e1


def ibep_failure_integral(c: DerivedConstants, z1: float):
    """``int_0^M z1 e^{-z1 x} Pr{x Psi + gamma_SD < Gamma} dx`` and its error bound."""
    za = c.w2 * c.gamma_th
    k = c.w3 * c.gamma_th

    def f(x):
        with np.errstate(divide="ignore"):
            zb = k / x
        return z1 * np.exp(-z1 * x) * hypoexp_cdf(za, zb)

    return _integrate_log(f, c.m_draw, k, [_relay_singularity(c, 1.0)])


def hu_failure_integral(c: DerivedConstants):
    """``int_0^inf lambda e^{-lambda x} Pr{x |h|^2/sigma^2 + gamma_SD < Gamma} dx``.

    Truncated at ``x_max = 30/lambda``. The conditional failure probability
    ``F`` decreases in ``x``, so the discarded tail is at most
    ``e^{-lambda x_max} F(x_max)`` while the kept part is at least
    ``(1 - e^{-lambda x_max}) F(x_max)``: the tail is below 1e-13 of the
    estimate. The bound is returned as part of the error.
    """
    lam = c.harvest_rate
    za = c.w2 * c.gamma_th
    k = 2.0 * c.w3 * c.gamma_th
    xstar = _relay_singularity(c, 2.0)
    x_max = _HU_TAIL_DECADES / lam

    def f(x):
        with np.errstate(divide="ignore"):
            zb = k / x
        return lam * np.exp(-lam * x) * hypoexp_cdf(za, zb)

    value, err = _integrate_log(f, x_max, k, [xstar, 1.0 / lam])
    tail = math.exp(-lam * x_max) * hypoexp_cdf(za, k / x_max)
    return value, err + tail


def _ratio(x, w2, k, gamma):
    """``x (e^{-W2 G} - e^{-k G / x}) / (x W2 - k)`` with the ``x = k/W2`` limit filled in.

    Written as ``-G e^{-W2 G} exprel(G (W2 - k/x))``; at the removable point
    the exprel factor is exactly 1.
    """
    with np.errstate(divide="ignore"):
        t = gamma * (w2 - k / x)
    return -gamma * math.exp(-w2 * gamma) * exprel(t)


def integral_i_hsu(c: DerivedConstants, z1: float, abs_tol: float = 1e-12):
    """``W2 z1 int_0^M x e^{-z1 x} (e^{-W2 G} - e^{-W3 G/x}) / (x W2 - W3) dx``.

    Returns ``(value, error_bound)``. The integrand's removable singularity
    at ``x* = W3/W2`` is patched with its limit and used as a split point.
    """
    if not z1 > 0:
        raise DomainError("z1 must be positive")
    g = c.gamma_th

    def f(x):
        return c.w2 * z1 * np.exp(-z1 * x) * _ratio(x, c.w2, c.w3, g)

    q = Quadrature(abs_tol=abs_tol, split_points=_split([c.w3 / c.w2], 0.0, c.m_draw))
    return adaptive_simpson(f, 0.0, c.m_draw, q)


def integral_i_hu(c: DerivedConstants, abs_tol: float = 1e-12):
    """``int_0^inf x e^{-lambda x} (e^{-W2 G} - e^{-2 W3 G/x}) / (x W2 - 2 W3) dx``."""
    lam = c.harvest_rate
    g = c.gamma_th
    xstar = 2.0 * c.w3 / c.w2
    x_max = _HU_TAIL_DECADES / lam

    def f(x):
        return np.exp(-lam * x) * _ratio(x, c.w2, 2.0 * c.w3, g)

    q = Quadrature(abs_tol=abs_tol, split_points=_split([xstar, 1.0 / lam], 0.0, x_max))
    value, err = adaptive_simpson(f, 0.0, x_max, q)
    # |ratio| <= (1 - e^{-W2 G}) / W2
    tail = -math.expm1(-c.w2 * g) / c.w2 * math.exp(-lam * x_max) / lam
    return value, err + tail


def _result(c: DerivedConstants, relay_fail: float, err: float, **extra) -> OutageResult:
    sr_bad = sr_failure(c)
    nack = c.nack_prob
    a = sr_bad * nack
    b = math.exp(-c.w4 * c.gamma_th) * relay_fail
    p = min(max(a + b, 0.0), 1.0)
    comps = {"sr_fail": a, "relay_phase": b, "relay_fail_given_sr_ok": relay_fail}
    comps.update(extra)
    return OutageResult(p_out=p, pr_nack=nack, components=comps,
                        quad_error=math.exp(-c.w4 * c.gamma_th) * err)


def _require_dist(c: DerivedConstants, dist: LimitingDistribution | None, policy):
    stable = classify(c) is StabilityClass.STABLE
    if dist is None:
        return limiting_distribution(c, policy)
    if dist.policy is not BufferPolicy(policy):
        raise ConsistencyError(f"expected a {policy} distribution")
    if dist.stable != stable or not math.isclose(dist.m_draw, c.m_draw, rel_tol=1e-12):
        raise ConsistencyError("distribution does not match the constants")
    return dist


# --- outage per scheme -----------------------------------------------------------

def outage_hsu_ibep(c: DerivedConstants, dist: LimitingDistribution | None = None) -> OutageResult:
    """Best-effort HSU outage (incremental or not, per ``c``)."""
    dist = _require_dist(c, dist, BufferPolicy.IBEP)
    full = full_draw_failure(c)
    if not dist.stable:
        return _result(c, full, 0.0, full_draw=full)
    z1 = dist.z1
    p_full = math.exp(-z1 * c.m_draw)
    partial, err = ibep_failure_integral(c, z1)
    return _result(c, p_full * full + partial, err, full_draw=full,
                   prob_full=p_full, partial_draw=partial)


def outage_hsu_ibep_literal(c: DerivedConstants, dist: LimitingDistribution | None = None,
                            abs_tol: float = 1e-12) -> OutageResult:
    """Best-effort HSU outage from the printed closed form with ``I_HSU``.

    Suffers cancellation once outage falls far below ``W2 * Gamma``; use
    :func:`outage_hsu_ibep` for evaluation.
    """
    dist = _require_dist(c, dist, BufferPolicy.IBEP)
    g = c.gamma_th
    pair = pair_term_literal(c.w1, c.w2, g)
    direct_bad = -math.expm1(-c.w2 * g)
    if not dist.stable:
        relay_fail, err, i_hsu = pair, 0.0, 0.0
    else:
        e = math.exp(-dist.z1 * c.m_draw)
        i_hsu, err = integral_i_hsu(c, dist.z1, abs_tol=abs_tol)
        relay_fail = e * pair + (1.0 - e) * direct_bad + i_hsu
    return _result(c, relay_fail, err, i_hsu=i_hsu)


def outage_hsu_iofp(c: DerivedConstants, dist: LimitingDistribution | None = None) -> OutageResult:
    """On-off HSU outage: the relay is silent whenever ``B < M``."""
    dist = _require_dist(c, dist, BufferPolicy.IOFP)
    full = full_draw_failure(c)
    if not dist.stable:
        return _result(c, full, 0.0, full_draw=full)
    p_full = 1.0 / c.phi
    direct_bad = -math.expm1(-c.w2 * c.gamma_th)
    return _result(c, p_full * full + (1.0 - p_full) * direct_bad, 0.0,
                   full_draw=full, prob_full=p_full)


def outage_hu(c: DerivedConstants) -> OutageResult:
    """Harvest-use outage: the relay spends the slot's harvest ``X`` at power ``X``."""
    relay_fail, err = hu_failure_integral(c)
    return _result(c, relay_fail, err)


def outage_dt(c: DerivedConstants) -> OutageResult:
    p = -math.expm1(-c.w2 * c.gamma_th)
    return OutageResult(p_out=p, pr_nack=p, components={"direct": p}, quad_error=0.0)


def constants_for(params: SystemParams, scheme) -> DerivedConstants:
    """Constants with the scheme's own signalling mode (phi targets re-solve M)."""
    scheme = PolicyKind(scheme)
    return derive_constants(params, mode=scheme.mode)


def outage(c: DerivedConstants, scheme) -> OutageResult:
    """Dispatch on scheme. ``c`` must already carry the scheme's signalling mode."""
    scheme = PolicyKind(scheme)
    if scheme is not PolicyKind.DT and c.incremental != scheme.incremental:
        raise ConsistencyError(f"{scheme.value} needs constants in {scheme.mode.value} mode")
    if scheme.buffer_policy is BufferPolicy.IBEP:
        return outage_hsu_ibep(c)
    if scheme.buffer_policy is BufferPolicy.IOFP:
        return outage_hsu_iofp(c)
    if scheme in (PolicyKind.HU, PolicyKind.NIHU):
        return outage_hu(c)
    return outage_dt(c)


def throughput(c: DerivedConstants, p_out: float, scheme) -> float:
    """Throughput in bpcu from outage: ``R0 Pr{ACK} + R0/2 (Pr{NACK} - P_out)``."""
    scheme = PolicyKind(scheme)
    r0 = c.rate
    if not 0.0 <= p_out <= 1.0:
        raise ConsistencyError(f"outage probability out of range: {p_out!r}")
    if scheme is PolicyKind.DT:
        return r0 * (1.0 - p_out)
    nack = c.nack_prob
    if p_out > nack + 1e-12:
        raise ConsistencyError(f"outage {p_out!r} exceeds Pr{{NACK}} = {nack!r}")
    return r0 * c.ack_prob + 0.5 * r0 * max(nack - p_out, 0.0)


def relay_failure_lower_bound(c: DerivedConstants, scheme) -> float:
    """Closed-form lower bound on ``Pr{gamma_RD + gamma_SD < Gamma}``.

    The conditional failure probability decreases in the relay's energy.
    Buffered relays never spend more than M, so the full-draw value bounds
    them. For HU, ``Pr{X <= x0} F(x0)`` bounds it for every ``x0``.
    """
    scheme = PolicyKind(scheme)
    g = c.gamma_th
    if scheme.buffer_policy is not None:
        return full_draw_failure(c)
    lam = c.harvest_rate
    best = 0.0
    for x0 in (1.0 / lam, 3.0 / lam):
        best = max(best, -math.expm1(-lam * x0) * hypoexp_cdf(c.w2 * g, 2.0 * c.w3 * g / x0))
    return best


def throughput_upper_bound(c: DerivedConstants, scheme) -> float:
    """Closed-form upper bound on throughput (exact for DT).

    Uses ``P_out >= Pr{NACK} Pr{SR fails} + Pr{SR ok} L`` with ``L`` from
    :func:`relay_failure_lower_bound`.
    """
    scheme = PolicyKind(scheme)
    g = c.gamma_th
    if scheme is PolicyKind.DT:
        return c.rate * math.exp(-c.w2 * g)
    p_lo = c.nack_prob * sr_failure(c) + math.exp(-c.w4 * g) * relay_failure_lower_bound(c, scheme)
    return c.rate * c.ack_prob + 0.5 * c.rate * max(c.nack_prob - p_lo, 0.0)


def evaluate(params: SystemParams, scheme):
    """``(OutageResult, throughput)`` for ``scheme`` at ``params``."""
    c = constants_for(params, scheme)
    res = outage(c, scheme)
    return res, throughput(c, res.p_out, scheme)


# --- high-SNR behaviour ----------------------------------------------------------

def outage_asymptote(c: DerivedConstants, policy) -> AsymptoteModel:
    """High-SNR outage model for a stable buffer with ``Gamma' = Gamma``."""
    policy = BufferPolicy(policy)
    if not c.incremental or c.gamma_th_prime != c.gamma_th:
        raise ConfigError("asymptotes assume incremental signalling with Gamma' = Gamma")
    g = c.gamma_th
    dsd = 1.0 / c.gain_sd
    dsr = 1.0 / c.gain_sr
    if policy is BufferPolicy.IBEP:
        return AsymptoteModel(policy, order=2, k0=dsd * dsr * g * g)
    return AsymptoteModel(policy, order=1, k1=g * g * dsr * dsd / c.phi,
                          k2=(1.0 - 1.0 / c.phi) * g * dsd)


def estimate_diversity_order(points, window_db: float | None = 15.0) -> float:
    """Least-squares slope of ``-log10 p_out`` against ``log10 snr``.

    ``points`` are ``(snr_linear, p_out)`` pairs. Only points within
    ``window_db`` of the highest SNR are fitted (``None`` keeps all).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise DomainError("need at least three (snr, p_out) points")
    snr, p = pts[:, 0], pts[:, 1]
    if np.any(np.diff(snr) <= 0) or np.any(snr <= 0):
        raise DomainError("SNRs must be positive and strictly increasing")
    if np.any(p <= 0):
        raise DomainError("outage probability 0 makes the log-slope degenerate")
    if np.any(p >= 1):
        raise DomainError("outage probability must be below 1")
    if window_db is not None:
        keep = 10.0 * np.log10(snr / snr[-1]) >= -window_db - 1e-9
        snr, p = snr[keep], p[keep]
        if len(snr) < 2:
            raise DomainError("fewer than two points inside the fit window")
    slope = np.polyfit(np.log10(snr), -np.log10(p), 1)[0]
    return float(slope)
