import json
import math

import mpmath
import pytest

from relaybuf.errors import ConfigError
from relaybuf.params import (Mode, PolicyKind, SystemParams, db_to_linear, derive_constants,
                             draw_for_phi, gamma_threshold, linear_to_db, load_config,
                             default_scenario, params_from_config, params_to_config)

BASE_CFG = {
    "geometry": {"src": [0, 0], "relay": [1, 0], "dst": [4, 0]},
    "alpha": 3, "noise_power_db": -40, "source_snr_db": 25, "rate_bpcu": 1.5,
    "harvest_mean_db": -10, "buffer": {"phi": 1.1},
}


@pytest.mark.parametrize("db, lin", [(0, 1.0), (-40, 1e-4), (-10, 0.1)])
def test_db_to_linear(db, lin):
    assert db_to_linear(db) == pytest.approx(lin, rel=1e-15)
    assert linear_to_db(lin) == pytest.approx(db, abs=1e-12)


@pytest.mark.parametrize("bad", [math.inf, -math.inf, math.nan, "x"])
def test_db_to_linear_rejects_non_finite(bad):
    with pytest.raises(ConfigError):
        db_to_linear(bad)


@pytest.mark.parametrize("r0, g", [(1.5, 7.0), (0.5, 1.0), (1.0, 3.0)])
def test_gamma_threshold_examples(r0, g):
    assert gamma_threshold(r0) == g


def test_gamma_threshold_small_rate_matches_mpmath():
    for r0 in (1e-12, 1e-6, 0.01, 0.2, 0.3):
        exact = float(mpmath.power(2, mpmath.mpf(2) * mpmath.mpf(r0)) - 1)
        assert gamma_threshold(r0) == pytest.approx(exact, rel=1e-14)


@pytest.mark.parametrize("r0", [0, -1, math.nan, math.inf])
def test_gamma_threshold_rejects(r0):
    with pytest.raises(ConfigError):
        gamma_threshold(r0)


def test_geometry_from_coordinates():
    p = default_scenario()
    assert (p.d_sr, p.d_rd, p.d_sd) == (1.0, 3.0, 4.0)


def test_w_constants_against_mpmath(default_constants):
    c = default_constants
    mpmath.mp.dps = 40
    sigma2 = mpmath.mpf(10) ** -4
    ps = sigma2 * mpmath.power(10, mpmath.mpf(25) / 10)
    w2 = sigma2 * 4 ** 3 / ps
    assert c.w2 == pytest.approx(float(w2), rel=1e-14)
    assert c.w2 == pytest.approx(0.202386, abs=5e-7)
    assert c.w3 == pytest.approx(1.35e-3, rel=1e-14)
    assert c.w4 == pytest.approx(float(sigma2 * 1 / ps), rel=1e-14)
    assert c.w1 * c.m_draw == pytest.approx(c.w3, rel=1e-15)


def test_phi_target_round_trip(default_params):
    c = derive_constants(default_params)
    assert c.phi == 1.1
    recomputed = c.m_draw * c.harvest_rate * c.nack_prob
    assert recomputed == pytest.approx(1.1, rel=1e-12)
    with_m = default_params.replace(buffer_m=c.m_draw)
    c2 = derive_constants(with_m)
    assert c2.phi == pytest.approx(1.1, rel=1e-12)
    assert draw_for_phi(c2.phi, c2.harvest_rate, c2.nack_prob) == pytest.approx(c.m_draw, rel=1e-12)


def test_non_incremental_mode_is_exact(default_params):
    c = derive_constants(default_params, mode="non_incremental")
    assert c.gamma_th_prime is None
    assert c.ack_prob == 0.0
    assert c.nack_prob == 1.0
    assert c.phi == 1.1
    assert c.m_draw == pytest.approx(1.1 / c.harvest_rate, rel=1e-15)


def test_non_incremental_given_m_reduces_to_m_lambda():
    p = default_scenario(buffer_m=0.2, mode=Mode.NON_INCREMENTAL)
    c = derive_constants(p)
    assert c.phi == 0.2 * c.harvest_rate


def test_gamma_prime_override(default_params):
    c = derive_constants(default_params, gamma_th_prime=14.0)
    assert c.gamma_th_prime == 14.0
    with pytest.raises(ConfigError):
        derive_constants(default_params, gamma_th_prime=1.0)
    with pytest.raises(ConfigError):
        derive_constants(default_params, mode="non_incremental", gamma_th_prime=14.0)


@pytest.mark.parametrize("field, value", [
    ("d_sr", 0.0), ("alpha", -1.0), ("noise_power", 0.0), ("source_power", -1.0),
    ("rate", 0.0), ("harvest_mean", math.nan)])
def test_invalid_params(field, value):
    kw = dict(d_sr=1, d_rd=3, d_sd=4, alpha=3, noise_power=1e-4, source_power=1.0, rate=1.5,
              harvest_mean=0.1, buffer_phi=1.1)
    kw[field] = value
    with pytest.raises(ConfigError):
        SystemParams(**kw)


def test_triangle_and_buffer_validation():
    kw = dict(alpha=3, noise_power=1e-4, source_power=1.0, rate=1.5, harvest_mean=0.1)
    with pytest.raises(ConfigError):
        SystemParams(d_sr=1, d_rd=1, d_sd=4, buffer_phi=1.1, **kw)
    with pytest.raises(ConfigError):
        SystemParams(d_sr=1, d_rd=3, d_sd=4, **kw)
    with pytest.raises(ConfigError):
        SystemParams(d_sr=1, d_rd=3, d_sd=4, buffer_phi=1.1, buffer_m=1.0, **kw)


def test_config_round_trip(tmp_path):
    p = params_from_config(BASE_CFG)
    assert p == default_scenario(25.0)
    cfg = params_to_config(p)
    assert params_from_config(cfg) == p
    f = tmp_path / "c.json"
    f.write_text(json.dumps(BASE_CFG))
    assert load_config(f) == p


def test_config_with_distances_and_m():
    cfg = dict(BASE_CFG, geometry={"d_sr": 1, "d_rd": 3, "d_sd": 4}, buffer={"m": 0.5},
               mode="non_incremental")
    p = params_from_config(cfg)
    assert p.buffer_m == 0.5 and p.mode is Mode.NON_INCREMENTAL
    assert params_from_config(params_to_config(p)) == p


@pytest.mark.parametrize("mutate", [
    lambda c: c.update(extra=1),
    lambda c: c.pop("alpha"),
    lambda c: c.update(buffer={"m": 1, "phi": 1}),
    lambda c: c.update(geometry={"src": [0, 0], "d_sd": 4}),
    lambda c: c.update(mode="sometimes"),
    lambda c: c.update(noise_power_db="loud"),
])
def test_config_errors(mutate):
    cfg = json.loads(json.dumps(BASE_CFG))
    mutate(cfg)
    with pytest.raises(ConfigError):
        params_from_config(cfg)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_policy_kind_properties():
    assert PolicyKind.NIBEP.mode is Mode.NON_INCREMENTAL
    assert PolicyKind.HU.mode is Mode.INCREMENTAL
    assert PolicyKind.NIOFP.buffer_policy.value == "IOFP"
    assert PolicyKind.NIHU.buffer_policy is None
    assert not PolicyKind.DT.relayed


def test_with_snr_db_and_replace(default_params):
    p = default_params.with_snr_db(35.0)
    assert p.source_snr == pytest.approx(10 ** 3.5, rel=1e-14)
    q = default_params.replace(d_rd=2.0, d_sr=2.0)
    assert q.positions is None and q.d_sd == 4.0
