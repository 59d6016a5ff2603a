"""Special functions and adaptive quadrature.

* :func:`lambert_w0` -- principal branch of the Lambert W function on
  ``[-1/e, inf)``.
* :func:`integrate` / :func:`adaptive_simpson` -- vectorised adaptive Simpson
  rule with Richardson error estimate and forced split points.
* :func:`hypoexp_cdf` -- ``Pr{A + B < 1}`` for independent exponentials,
  accurate to near machine precision even when the result is tiny.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special as sc

from .errors import DomainError, QuadratureError

BRANCH_POINT = -math.exp(-1.0)
_E = math.e


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def lambert_w0(z):
    """Principal branch W0 of the Lambert W function, ``w * exp(w) = z``.

    Accepts scalars or arrays. Arguments up to 1e-15 below ``-1/e`` are
    clamped onto the branch point; anything further below raises
    :class:`DomainError`.

    Starting values come from the branch-point series (``z`` near ``-1/e``),
    Winitzki's logarithmic approximation (moderate ``z``) or the asymptotic
    ``log z - log log z`` expansion; Halley's iteration then refines them.
    """
    if isinstance(z, (float, int)) and not isinstance(z, bool):
        return _lambert_w0_scalar(float(z))
    z, scalar = _as_array(z)
    if np.any(np.isnan(z)) or np.any(z < BRANCH_POINT - 1e-15):
        raise DomainError("lambert_w0 requires z >= -1/e")
    z = np.atleast_1d(np.maximum(z, BRANCH_POINT))
    w = np.empty_like(z)

    near = z < -0.25
    if np.any(near):
        p2 = 2.0 * np.maximum(_E * z[near] + 1.0, 0.0)
        p = np.sqrt(p2)
        w[near] = -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0
                  + p * (769.0 / 17280.0)))))
    big = z > 3.0
    if np.any(big):
        l1 = np.log(z[big])
        l2 = np.log(l1)
        w[big] = l1 - l2 + l2 / l1
    mid = ~(near | big)
    if np.any(mid):
        l = np.log1p(z[mid])
        w[mid] = l * (1.0 - np.log1p(l) / (2.0 + l))

    # the branch-point series is already exact to rounding very close to -1/e
    active = ~(near & (_E * z + 1.0 < 1e-12))
    for _ in range(30):
        if not np.any(active):
            break
        wa = w[active]
        ew = np.exp(wa)
        f = wa * ew - z[active]
        wp1 = wa + 1.0
        denom = ew * wp1 - (wa + 2.0) * f / (2.0 * wp1)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(denom != 0.0, f / denom, 0.0)
        w_new = wa - step
        w_new = np.maximum(w_new, -1.0)
        w[active] = w_new
        done = np.abs(step) <= 4e-16 * np.maximum(1.0, np.abs(w_new))
        idx = np.flatnonzero(active)
        active[idx[done]] = False

    w = np.maximum(w, -1.0)
    return float(w[0]) if scalar else w


def _lambert_w0_scalar(z: float) -> float:
    """Scalar twin of :func:`lambert_w0` (same starts, same Halley steps)."""
    if math.isnan(z) or z < BRANCH_POINT - 1e-15:
        raise DomainError("lambert_w0 requires z >= -1/e")
    z = max(z, BRANCH_POINT)
    if z < -0.25:
        p = math.sqrt(2.0 * max(_E * z + 1.0, 0.0))
        w = -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0
            + p * (769.0 / 17280.0)))))
        if _E * z + 1.0 < 1e-12:
            return max(w, -1.0)
    elif z > 3.0:
        l1 = math.log(z)
        l2 = math.log(l1)
        w = l1 - l2 + l2 / l1
    else:
        l = math.log1p(z)
        w = l * (1.0 - math.log1p(l) / (2.0 + l))
    for _ in range(30):
        ew = math.exp(w)
        f = w * ew - z
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        step = f / denom if denom != 0.0 else 0.0
        w = max(w - step, -1.0)
        if abs(step) <= 4e-16 * max(1.0, abs(w)):
            break
    return max(w, -1.0)


# --- quadrature ---------------------------------------------------------------

@dataclass(frozen=True)
class Quadrature:
    """Settings for :func:`integrate`.

    The run stops once the summed local error estimate is at most
    ``max(abs_tol, rel_tol * |estimate|)``. ``split_points`` are forced
    panel boundaries, used to keep a removable singularity on an edge.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 0.0
    max_depth: int = 60
    split_points: tuple = field(default_factory=tuple)
    initial_panels: int = 16
    max_evals: int = 2_000_000

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise DomainError("abs_tol must be positive")
        if self.rel_tol < 0:
            raise DomainError("rel_tol must be non-negative")
        object.__setattr__(self, "split_points", tuple(float(s) for s in self.split_points))


def adaptive_simpson(f, a: float, b: float, q: Quadrature = Quadrature()):
    """Integrate ``f`` over ``[a, b]`` and return ``(value, error_bound)``.

    ``f`` must accept and return numpy arrays. All panels needing refinement
    at a given depth are bisected together, so the cost per level is one
    vectorised call of ``f``. Results are deterministic.
    """
    a, b = float(a), float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError("integration limits must be finite; truncate explicitly")
    if a == b:
        return 0.0, 0.0
    if a > b:
        v, e = adaptive_simpson(f, b, a, q)
        return -v, e
    for s in q.split_points:
        if not a < s < b:
            raise DomainError(f"split point {s} not strictly inside ({a}, {b})")

    edges = np.unique(np.concatenate(([a, b], q.split_points)))
    n0 = max(1, q.initial_panels)
    lo = np.concatenate([np.linspace(l, h, n0 + 1)[:-1] for l, h in zip(edges[:-1], edges[1:])])
    hi = np.concatenate([np.linspace(l, h, n0 + 1)[1:] for l, h in zip(edges[:-1], edges[1:])])
    mid = 0.5 * (lo + hi)
    vals = np.asarray(f(np.concatenate((lo, mid, hi))), dtype=float)
    n = lo.size
    flo, fmid, fhi = vals[:n], vals[n:2 * n], vals[2 * n:]
    whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
    depth = 0
    evals = 3 * n
    total_w = b - a

    acc_value = 0.0
    acc_err = 0.0
    while lo.size:
        lm = 0.5 * (lo + mid)
        rm = 0.5 * (mid + hi)
        fv = np.asarray(f(np.concatenate((lm, rm))), dtype=float)
        evals += fv.size
        flm, frm = fv[:lo.size], fv[lo.size:]
        with np.errstate(invalid="ignore", over="ignore"):
            left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
            right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
            delta = left + right - whole
        err = np.abs(delta) / 15.0
        if not np.all(np.isfinite(delta)):
            raise QuadratureError("integrand returned non-finite values",
                                  acc_value + float(np.nansum(whole)), math.inf)

        estimate = acc_value + float(np.sum(left + right + delta / 15.0))
        tol = max(q.abs_tol, q.rel_tol * abs(estimate))
        # tolerance share proportional to panel width
        local_tol = tol * (hi - lo) / total_w
        ok = err <= local_tol
        # refinement can no longer separate nodes in floating point
        ok |= (mid - lo) <= 4.0 * np.finfo(float).eps * np.maximum(np.abs(lo), np.abs(hi))
        acc_value += float(np.sum((left + right + delta / 15.0)[ok]))
        acc_err += float(np.sum(err[ok]))
        keep = ~ok
        depth += 1
        if np.any(keep) and (depth >= q.max_depth or evals > q.max_evals):
            rest = float(np.sum((left + right)[keep]))
            raise QuadratureError(
                f"adaptive Simpson did not converge (depth {depth}, {evals} evaluations)",
                acc_value + rest, acc_err + float(np.sum(err[keep])))
        # children of unfinished panels
        lo_k, mid_k, hi_k = lo[keep], mid[keep], hi[keep]
        lo = np.concatenate((lo_k, mid_k))
        hi = np.concatenate((mid_k, hi_k))
        mid = np.concatenate((lm[keep], rm[keep]))
        flo_n = np.concatenate((flo[keep], fmid[keep]))
        fhi_n = np.concatenate((fmid[keep], fhi[keep]))
        fmid = np.concatenate((flm[keep], frm[keep]))
        whole = np.concatenate((left[keep], right[keep]))
        flo, fhi = flo_n, fhi_n

    return acc_value, acc_err


def integrate(f, a: float, b: float, q: Quadrature = Quadrature()) -> float:
    """Adaptive-Simpson estimate of the integral of ``f`` over ``[a, b]``."""
    return adaptive_simpson(f, a, b, q)[0]


# --- exponential-sum helpers ------------------------------------------------------

def exprel(x):
    """``(exp(x) - 1) / x`` with the removable point at 0 filled in."""
    x, scalar = _as_array(x)
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.where(x == -np.inf, 0.0, sc.exprel(x))
    return float(out) if scalar else out


def _incomplete_moment(n: int, m):
    """``int_0^1 u**n exp(-m u) du`` for ``m >= 0``."""
    m = np.asarray(m, dtype=float)
    out = np.empty_like(m)
    small = m < 0.1
    if np.any(small):
        ms = m[small]
        term = np.ones_like(ms)
        acc = np.zeros_like(ms)
        for j in range(20):
            acc += term / (n + 1 + j)
            term = term * (-ms) / (j + 1)
        out[small] = acc
    if np.any(~small):
        ml = m[~small]
        out[~small] = math.factorial(n) * sc.gammainc(n + 1, ml) / ml ** (n + 1)
    return out


def _hypoexp_finite(a, b):
    d = b - a
    # difference of exprel loses about log10(max(1, m)/|d|) digits
    near = np.abs(d) < 1e-3 * np.maximum(1.0, 0.5 * (a + b))
    if not near.any():
        return np.clip(_hypoexp_far(a, b), 0.0, 1.0)
    if near.all():
        return np.clip(_hypoexp_near(a, b), 0.0, 1.0)
    res = np.empty_like(a)
    res[~near] = _hypoexp_far(a[~near], b[~near])
    res[near] = _hypoexp_near(a[near], b[near])
    return np.clip(res, 0.0, 1.0)


def _hypoexp_far(a, b):
    diff = sc.exprel(-a) - sc.exprel(-b)
    # keep the large rate in a ratio so a*b cannot overflow
    big, small = np.maximum(a, b), np.minimum(a, b)
    return small * diff * (big / (b - a))


def _hypoexp_near(a, b):
    m = 0.5 * (a + b)
    h2 = (0.5 * (b - a)) ** 2
    series = (_incomplete_moment(1, m) + h2 / 6.0 * _incomplete_moment(3, m)
              + h2 * h2 / 120.0 * _incomplete_moment(5, m))
    return a * b * series


def hypoexp_cdf(za, zb):
    """``Pr{A + B < 1}`` for independent ``A ~ Exp(za)``, ``B ~ Exp(zb)``.

    Rates are dimensionless (the actual rate times the threshold). The
    textbook form ``1 - (zb e^-za - za e^-zb)/(zb - za)`` cancels badly when
    the result is small or the rates coincide; here it is rewritten as

        za * zb * (exprel(-za) - exprel(-zb)) / (zb - za)

    and, for nearly equal rates, as a series in the half-gap ``h``:

        za * zb * sum_k h**(2k) / (2k+1)! * int_0^1 u**(2k+1) e^(-m u) du

    with ``m`` the mean rate. ``zb = inf`` gives the single-exponential CDF.
    """
    za, sa = _as_array(za)
    zb, sb = _as_array(zb)
    za, zb = np.broadcast_arrays(za, zb)
    if (za < 0).any() or (zb < 0).any():
        raise DomainError("rates must be non-negative")
    inf_a, inf_b = np.isinf(za), np.isinf(zb)
    if inf_a.any() or inf_b.any():
        out = np.empty(za.shape, dtype=float)
        out[inf_a & inf_b] = 1.0
        only_b = inf_b & ~inf_a
        out[only_b] = -np.expm1(-za[only_b])
        only_a = inf_a & ~inf_b
        out[only_a] = -np.expm1(-zb[only_a])
        fin = ~(inf_a | inf_b)
        out[fin] = _hypoexp_finite(za[fin], zb[fin])
    else:
        out = _hypoexp_finite(za.ravel(), zb.ravel()).reshape(za.shape)
    return float(out) if (sa and sb) else out
