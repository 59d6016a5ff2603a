import math

import mpmath
import numpy as np
import pytest

from relaybuf.errors import ConfigError, ConsistencyError, DomainError
from relaybuf.limitdist import limiting_distribution
from relaybuf.params import PolicyKind, db_to_linear, derive_constants, default_scenario
from relaybuf.performance import (estimate_diversity_order, evaluate, full_draw_failure,
                                  integral_i_hsu, integral_i_hu, outage, outage_asymptote,
                                  outage_dt, outage_hsu_ibep, outage_hsu_ibep_literal,
                                  outage_hsu_iofp, outage_hu, pair_term_literal, throughput,
                                  throughput_upper_bound)

SCHEMES = [s for s in PolicyKind]


def consts(snr_db=25.0, **kw):
    kw.setdefault("buffer_phi", 1.1)
    return derive_constants(default_scenario(snr_db=snr_db, **kw))


def f_mp(a, b):
    """Pr{E1/a' + E2/b' < 1}-style hypoexponential cdf at rates a, b (50 digits)."""
    a, b = mpmath.mpf(a), mpmath.mpf(b)
    if a == b:
        return 1 - mpmath.exp(-a) * (1 + a)
    return 1 - (b * mpmath.exp(-a) - a * mpmath.exp(-b)) / (b - a)


def joint_oracle(c, relay_fail):
    return float(c.nack_prob * -math.expm1(-c.w4 * c.gamma_th)
                 + math.exp(-c.w4 * c.gamma_th) * relay_fail)


# --- closed-form scheme values against independent high-precision oracles -----

@pytest.mark.parametrize("snr_db", [15.0, 25.0, 35.0])
def test_ibep_against_mpmath_quadrature(snr_db):
    mpmath.mp.dps = 30
    c = consts(snr_db)
    z1 = limiting_distribution(c, "IBEP").z1
    g, m = c.gamma_th, c.m_draw
    xs = c.w3 / c.w2
    f = lambda x: z1 * mpmath.exp(-z1 * x) * f_mp(c.w2 * g, c.w3 * g / x)
    pts = [mpmath.mpf(0), *( [xs] if xs < m else []), mpmath.mpf(m)]
    relay = mpmath.exp(-z1 * m) * f_mp(c.w2 * g, c.w1 * g) + mpmath.quad(f, pts)
    assert outage_hsu_ibep(c).p_out == pytest.approx(joint_oracle(c, float(relay)), rel=1e-10)


@pytest.mark.parametrize("snr_db", [15.0, 25.0, 35.0])
def test_hu_against_mpmath_quadrature(snr_db):
    mpmath.mp.dps = 30
    c = consts(snr_db)
    g, lam = c.gamma_th, c.harvest_rate
    f = lambda x: lam * mpmath.exp(-lam * x) * f_mp(c.w2 * g, 2 * c.w3 * g / x)
    relay = mpmath.quad(f, [0, 2 * c.w3 / c.w2, 1 / lam, 10 / lam, mpmath.inf])
    assert outage_hu(c).p_out == pytest.approx(joint_oracle(c, float(relay)), rel=1e-10)


@pytest.mark.parametrize("snr_db", [15.0, 25.0, 35.0])
def test_iofp_closed_form(snr_db):
    c = consts(snr_db)
    full = float(f_mp(c.w2 * c.gamma_th, c.w1 * c.gamma_th))
    direct = -math.expm1(-c.w2 * c.gamma_th)
    relay = full / c.phi + (1 - 1 / c.phi) * direct
    assert outage_hsu_iofp(c).p_out == pytest.approx(joint_oracle(c, relay), rel=1e-13)


def test_dt_example():
    c = consts(25.0)
    assert c.w2 == pytest.approx(0.202386, abs=5e-7)
    r = outage_dt(c)
    assert r.p_out == pytest.approx(-math.expm1(-c.w2 * 7.0), rel=1e-15)
    assert r.p_out == pytest.approx(0.75752, abs=5e-5)
    assert r.quad_error == 0.0
    assert outage_dt(consts(-60.0)).p_out == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_gamma_to_zero(scheme):
    res, tau = evaluate(default_scenario(rate=1e-9), scheme)
    assert 0.0 <= res.p_out < 1e-7


@pytest.mark.parametrize("scheme", SCHEMES)
@pytest.mark.parametrize("snr_db", [5.0, 15.0, 25.0, 35.0, 45.0])
def test_outage_invariants(scheme, snr_db):
    c = derive_constants(default_scenario(snr_db=snr_db), mode=PolicyKind(scheme).mode)
    r = outage(c, scheme)
    assert 0.0 <= r.p_out <= 1.0
    if scheme is not PolicyKind.DT:
        assert r.p_out <= r.pr_nack + 1e-12
        assert r.p_out == pytest.approx(r.components["sr_fail"] + r.components["relay_phase"],
                                        rel=1e-15, abs=1e-300)
    assert r.quad_error <= 1e-10


def test_dispatch_checks_mode():
    c = derive_constants(default_scenario(), mode="non_incremental")
    with pytest.raises(ConsistencyError):
        outage(c, "IBEP")
    with pytest.raises(ConsistencyError):
        outage_hsu_ibep(c, limiting_distribution(c, "IOFP"))
    assert outage(c, "DT").p_out == outage_dt(c).p_out


# --- literal closed form and the I integrals --------------------------------

@pytest.mark.parametrize("snr_db", [10.0, 15.0, 20.0, 25.0, 30.0])
def test_literal_closed_form_agrees(snr_db):
    c = consts(snr_db)
    a, b = outage_hsu_ibep(c).p_out, outage_hsu_ibep_literal(c).p_out
    assert abs(a - b) <= 1e-9 * a


def test_i_hsu_midpoint_oracle():
    c = consts(25.0)
    z1 = limiting_distribution(c, "IBEP").z1
    g, m, w2, w3 = c.gamma_th, c.m_draw, c.w2, c.w3
    xs = w3 / w2
    assert xs < m
    eps = 1e-9

    def piece(a, b, n):
        h = (b - a) / n
        x = a + h * (np.arange(n) + 0.5)
        y = x * np.exp(-z1 * x) * (np.exp(-w2 * g) - np.exp(-w3 * g / x)) / (x * w2 - w3)
        return h * y.sum()

    # 10^6 panels split in proportion to the two sides of the excluded window
    n1 = int(1e6 * xs / m)
    ref = w2 * z1 * (piece(0.0, xs - eps, n1) + piece(xs + eps, m, 10 ** 6 - n1))
    val, err = integral_i_hsu(c, z1)
    assert val == pytest.approx(-0.11360536573977942, abs=1e-12)
    assert abs(val - ref) <= 1e-8
    assert err <= 1e-10


def test_i_hsu_examples():
    c = derive_constants(default_scenario(rate=1e-12))
    z1 = limiting_distribution(c, "IBEP").z1
    assert abs(integral_i_hsu(c, z1)[0]) < 1e-9
    # M below x*: smooth integrand
    c = consts(25.0, harvest_mean=db_to_linear(-30.0))
    assert c.m_draw < c.w3 / c.w2
    v, e = integral_i_hsu(c, limiting_distribution(c, "IBEP").z1)
    assert math.isfinite(v) and e <= 1e-10


def test_i_hu_consistent_with_joint_form():
    for snr in (15.0, 25.0, 35.0):
        c = consts(snr)
        i_hu, err = integral_i_hu(c)
        assert err <= 1e-10
        # HU printed form: same structure as the IBEP pair term with harvest weights
        g = c.gamma_th
        relay = -math.expm1(-c.w2 * g) + c.w2 * c.harvest_rate * i_hu
        assert joint_oracle(c, relay) == pytest.approx(outage_hu(c).p_out, rel=1e-8)


def test_hu_no_harvest_limit():
    c = consts(25.0, harvest_mean=db_to_linear(-200.0))
    g = c.gamma_th
    expected = (-math.expm1(-c.w4 * g) * c.nack_prob
                + math.exp(-c.w4 * g) * -math.expm1(-c.w2 * g))
    assert outage_hu(c).p_out == pytest.approx(expected, rel=1e-9)


# --- limits and continuity ------------------------------------------------------

@pytest.mark.parametrize("s", [1 - 1e-9, 1 + 1e-9])
def test_w1_equals_w2_limit(s):
    w2, g = 0.2023857702507762, 7.0
    lim = pair_term_literal(w2, w2, g)
    assert lim == pytest.approx(-math.expm1(-w2 * g) - w2 * g * math.exp(-w2 * g), rel=1e-15)
    assert abs(pair_term_literal(w2 * s, w2, g) - lim) <= 1e-6 * lim
    # the cancellation-free form used for evaluation is continuous to rounding
    c = consts(25.0)
    base = derive_constants(default_scenario(snr_db=25.0, buffer_m=c.w3 / c.w2))
    shifted = derive_constants(default_scenario(snr_db=25.0, buffer_m=c.w3 / (c.w2 * s)))
    assert base.w1 == pytest.approx(base.w2, rel=1e-14)
    a, b = full_draw_failure(base), full_draw_failure(shifted)
    assert a == pytest.approx(float(f_mp(base.w2 * g, base.w2 * g)), rel=1e-12)
    assert abs(a - b) <= 1e-6 * a


@pytest.mark.parametrize("scheme", ["IBEP", "IOFP", "HU"])
@pytest.mark.parametrize("snr_db", [15.0, 25.0, 35.0])
def test_non_incremental_consistency(scheme, snr_db):
    p = default_scenario(snr_db=snr_db)
    ni_scheme = {"IBEP": "NIBEP", "IOFP": "NIOFP", "HU": "NIHU"}[scheme]
    ni = outage(derive_constants(p, mode="non_incremental"), ni_scheme).p_out
    big = derive_constants(p, gamma_th_prime=1e6 * 7.0)
    inc = outage(big, scheme).p_out
    assert abs(inc - ni) <= 1e-9 * ni


@pytest.mark.parametrize("f", [outage_hsu_ibep, outage_hsu_iofp])
@pytest.mark.parametrize("snr_db", [15.0, 25.0, 35.0])
def test_phi_boundary_limit(f, snr_db):
    """Stable branch tends to the unstable branch as phi -> 1+, linearly in phi - 1."""
    def gap(eps):
        lo = f(consts(snr_db, buffer_phi=1 - eps)).p_out
        hi = f(consts(snr_db, buffer_phi=1 + eps)).p_out
        return abs(hi - lo)

    g4, g5, g6 = gap(1e-4), gap(1e-5), gap(1e-6)
    assert g5 / g4 == pytest.approx(0.1, rel=0.02)
    assert g6 / g5 == pytest.approx(0.1, rel=0.02)
    assert gap(1e-7) <= 1e-6


@pytest.mark.xfail(strict=True, reason="outage has a kink at phi = 1: the jump across "
                   "1 +/- 1e-4 is 1e-4 times a non-zero one-sided slope (see decisions ledger)")
def test_phi_boundary_stated_tolerance():
    for f in (outage_hsu_ibep, outage_hsu_iofp):
        lo = f(consts(25.0, buffer_phi=1 - 1e-4)).p_out
        hi = f(consts(25.0, buffer_phi=1 + 1e-4)).p_out
        assert abs(hi - lo) <= 1e-6


@pytest.mark.parametrize("scheme", ["DT", "HU", "NIHU"])
def test_monotone_in_power(scheme):
    ps = [evaluate(default_scenario(snr_db=s), scheme)[0].p_out for s in np.linspace(0, 50, 20)]
    assert all(b <= a for a, b in zip(ps, ps[1:]))


# --- throughput ------------------------------------------------------------------

def test_throughput_examples():
    c = derive_constants(default_scenario(), mode="non_incremental")
    assert throughput(c, 0.0, "NIBEP") == 0.75
    ci = consts(25.0)
    assert throughput(ci, ci.nack_prob, "IBEP") == pytest.approx(1.5 * ci.ack_prob, rel=1e-15)
    assert throughput(ci, 0.25, "DT") == pytest.approx(1.125)
    with pytest.raises(ConsistencyError):
        throughput(ci, ci.nack_prob + 1e-6, "IBEP")
    with pytest.raises(ConsistencyError):
        throughput(ci, -0.1, "DT")


def test_throughput_trend():
    taus = {s: evaluate(default_scenario(snr_db=25.0, rate=1.5), s)[1] for s in ("IBEP", "HU", "DT")}
    assert taus["IBEP"] >= taus["HU"] >= taus["DT"]


@pytest.mark.parametrize("scheme", SCHEMES)
def test_throughput_upper_bound(scheme):
    for snr in (5.0, 20.0, 35.0):
        for r in (0.1, 0.8, 1.5, 3.0, 6.0):
            p = default_scenario(snr_db=snr, rate=r)
            c = derive_constants(p, mode=PolicyKind(scheme).mode)
            tau = evaluate(p, scheme)[1]
            # both sides evaluate Pr{NACK} - P_out and share its rounding
            assert tau <= throughput_upper_bound(c, scheme) + 1e-12 * r


# --- asymptotics ------------------------------------------------------------------

def test_asymptote_coefficients():
    c = consts(25.0)
    ib = outage_asymptote(c, "IBEP")
    assert ib.order == 2 and ib.k0 == pytest.approx(3136.0, rel=1e-12)
    io = outage_asymptote(c, "IOFP")
    assert io.order == 1 and io.k2 == pytest.approx(40.727, abs=5e-4)
    assert io.k1 == pytest.approx(49 * 64 / 1.1, rel=1e-12)
    assert ib(1e4) == pytest.approx(3136e-8)
    with pytest.raises(ConfigError):
        outage_asymptote(derive_constants(default_scenario(), mode="non_incremental"), "IBEP")
    with pytest.raises(ConfigError):
        outage_asymptote(derive_constants(default_scenario(), gamma_th_prime=8.0), "IBEP")


def test_iofp_asymptote_ratio():
    c = consts(55.0)
    ratio = outage_hsu_iofp(c).p_out / outage_asymptote(c, "IOFP")(c.source_snr)
    assert 0.5 <= ratio <= 2.0


def test_ibep_asymptote_ratio_grows_logarithmically():
    """The exact IBEP outage exceeds K0/SNR^2 by a factor growing like log(SNR).

    K0 covers the S-R failure term only. The relay-phase term is also of
    order 1/SNR^2 but carries a log(SNR) factor from the partial-draw
    integral, so the ratio climbs by about 1.25x per 10 dB.
    """
    ratios = []
    for snr_db in (45.0, 55.0, 65.0, 85.0):
        c = consts(snr_db)
        ratios.append(outage_hsu_ibep(c).p_out / outage_asymptote(c, "IBEP")(c.source_snr))
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
    assert ratios[1] == pytest.approx(8.45, abs=0.05)
    # ratio * K0 / SNR^2 stays within a log factor: the slope is still 2 - o(1)
    steps = np.diff(ratios[:3])
    assert steps[1] == pytest.approx(steps[0], rel=0.3)


@pytest.mark.xfail(strict=True, reason="the log(SNR) relay-phase term keeps the ratio at "
                   "about 8.45 at 55 dB (see decisions ledger)")
def test_ibep_asymptote_ratio_stated_range():
    c = consts(55.0)
    ratio = outage_hsu_ibep(c).p_out / outage_asymptote(c, "IBEP")(c.source_snr)
    assert 0.5 <= ratio <= 2.0


def test_diversity_order_fit():
    s = np.logspace(1, 6, 11)
    assert estimate_diversity_order(list(zip(s, 3 / s ** 2)), window_db=None) == pytest.approx(2.0)
    assert estimate_diversity_order(list(zip(s, 0.5 / s))) == pytest.approx(1.0)
    for bad in ([(1, 0.1), (2, 0.1)], [(1, 0.1), (2, 0.0), (3, 0.01)],
                [(2, 0.1), (1, 0.05), (3, 0.01)], [(1, 1.0), (2, 0.5), (3, 0.1)]):
        with pytest.raises(DomainError):
            estimate_diversity_order(bad)


@pytest.mark.parametrize("policy, lo, hi", [("IBEP", 1.7, 2.3), ("IOFP", 0.8, 1.3)])
def test_diversity_orders(policy, lo, hi):
    snrs = np.arange(40.0, 60.01, 2.5)
    f = outage_hsu_ibep if policy == "IBEP" else outage_hsu_iofp
    pts = [(db_to_linear(s), f(consts(s)).p_out) for s in snrs]
    assert lo <= estimate_diversity_order(pts) <= hi
    assert lo <= estimate_diversity_order(pts, window_db=None) <= hi
