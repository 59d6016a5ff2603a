"""Scenario parameters, configuration parsing and derived link constants.

All energies and powers are normalised to a unit signalling interval, so a
half-slot transmission drawing energy ``E`` radiates power ``2E``.
"""
from __future__ import annotations

import dataclasses
import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError


class Mode(str, enum.Enum):
    INCREMENTAL = "incremental"
    NON_INCREMENTAL = "non_incremental"


class BufferPolicy(str, enum.Enum):
    """How a buffered relay draws energy on NACK: best-effort or on-off."""

    IBEP = "IBEP"
    IOFP = "IOFP"


class PolicyKind(str, enum.Enum):
    """Transmission scheme: buffered (HSU), harvest-use (HU) or direct (DT).

    The ``NI`` prefix marks non-incremental signalling (relay always assists).
    """

    IBEP = "IBEP"
    IOFP = "IOFP"
    NIBEP = "NIBEP"
    NIOFP = "NIOFP"
    HU = "HU"
    NIHU = "NIHU"
    DT = "DT"

    @property
    def incremental(self) -> bool:
        return not self.value.startswith("NI")

    @property
    def mode(self) -> Mode:
        return Mode.INCREMENTAL if self.incremental else Mode.NON_INCREMENTAL

    @property
    def buffer_policy(self) -> "BufferPolicy | None":
        if self.value.endswith("BEP"):
            return BufferPolicy.IBEP
        if self.value.endswith("OFP"):
            return BufferPolicy.IOFP
        return None

    @property
    def relayed(self) -> bool:
        return self is not PolicyKind.DT


def db_to_linear(x_db: float) -> float:
    """Convert a decibel value to linear scale, ``10**(x_db/10)``."""
    try:
        x = float(x_db)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"not a number: {x_db!r}") from exc
    if not math.isfinite(x):
        raise ConfigError(f"dB value must be finite, got {x_db!r}")
    return 10.0 ** (x / 10.0)


def linear_to_db(x: float) -> float:
    if not x > 0:
        raise ConfigError(f"linear value must be positive, got {x!r}")
    return 10.0 * math.log10(x)


def gamma_threshold(r0: float) -> float:
    """SNR threshold ``2**(2*r0) - 1`` for rate ``r0`` sent in half a slot."""
    r0 = float(r0)
    if not (math.isfinite(r0) and r0 > 0):
        raise ConfigError(f"rate must be positive and finite, got {r0!r}")
    if r0 < 0.25:
        return math.expm1(2.0 * r0 * math.log(2.0))
    return 2.0 ** (2.0 * r0) - 1.0


def _positive(name: str, value: Any) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a number, got {value!r}") from exc
    if not (math.isfinite(v) and v > 0):
        raise ConfigError(f"{name} must be positive and finite, got {value!r}")
    return v


@dataclass(frozen=True)
class SystemParams:
    """Physical scenario.

    Exactly one of ``buffer_m`` (energy drawn per relay transmission) and
    ``buffer_phi`` (target stability factor, from which the draw is solved)
    must be given.
    """

    d_sr: float
    d_rd: float
    d_sd: float
    alpha: float
    noise_power: float
    source_power: float
    rate: float
    harvest_mean: float
    buffer_m: float | None = None
    buffer_phi: float | None = None
    mode: Mode = Mode.INCREMENTAL
    positions: tuple | None = None

    def __post_init__(self):
        for name in ("d_sr", "d_rd", "d_sd", "alpha", "noise_power",
                     "source_power", "rate", "harvest_mean"):
            object.__setattr__(self, name, _positive(name, getattr(self, name)))
        if (self.buffer_m is None) == (self.buffer_phi is None):
            raise ConfigError("exactly one of buffer_m and buffer_phi must be set")
        if self.buffer_m is not None:
            object.__setattr__(self, "buffer_m", _positive("buffer_m", self.buffer_m))
        else:
            object.__setattr__(self, "buffer_phi", _positive("buffer_phi", self.buffer_phi))
        try:
            object.__setattr__(self, "mode", Mode(self.mode))
        except ValueError as exc:
            raise ConfigError(f"unknown mode {self.mode!r}") from exc
        d = sorted((self.d_sr, self.d_rd, self.d_sd))
        if d[2] > (d[0] + d[1]) * (1 + 1e-12):
            raise ConfigError(
                f"distances violate the triangle inequality: "
                f"d_sr={self.d_sr}, d_rd={self.d_rd}, d_sd={self.d_sd}")

    @classmethod
    def from_positions(cls, src, relay, dst, **kwargs) -> "SystemParams":
        src, relay, dst = (tuple(float(c) for c in p) for p in (src, relay, dst))
        for p in (src, relay, dst):
            if len(p) != 2:
                raise ConfigError(f"coordinates must be 2-D pairs, got {p!r}")
        return cls(d_sr=math.dist(src, relay), d_rd=math.dist(relay, dst),
                   d_sd=math.dist(src, dst), positions=(src, relay, dst), **kwargs)

    @property
    def source_snr(self) -> float:
        return self.source_power / self.noise_power

    @property
    def harvest_rate(self) -> float:
        return 1.0 / self.harvest_mean

    def replace(self, **changes) -> "SystemParams":
        if "buffer_m" in changes and "buffer_phi" not in changes:
            changes["buffer_phi"] = None
        if "buffer_phi" in changes and "buffer_m" not in changes:
            changes["buffer_m"] = None
        if {"d_sr", "d_rd", "d_sd"} & changes.keys():
            changes.setdefault("positions", None)
        return dataclasses.replace(self, **changes)

    def with_snr_db(self, snr_db: float) -> "SystemParams":
        return self.replace(source_power=self.noise_power * db_to_linear(snr_db))


@dataclass(frozen=True)
class DerivedConstants:
    """Link constants consumed by every analytic and simulation routine.

    ``gamma_th_prime`` is ``None`` in non-incremental mode, standing for an
    infinite ACK threshold; use :attr:`ack_prob` rather than exponentiating it.
    """

    w1: float
    w2: float
    w3: float
    w4: float
    gamma_th: float
    gamma_th_prime: float | None
    phi: float
    m_draw: float
    rate: float
    harvest_rate: float
    noise_power: float
    source_power: float
    gain_sd: float
    gain_sr: float
    gain_rd: float

    @property
    def incremental(self) -> bool:
        return self.gamma_th_prime is not None

    @property
    def ack_prob(self) -> float:
        """Pr{gamma_SD >= Gamma'}; exactly 0 for non-incremental signalling."""
        if self.gamma_th_prime is None:
            return 0.0
        return math.exp(-self.w2 * self.gamma_th_prime)

    @property
    def nack_prob(self) -> float:
        if self.gamma_th_prime is None:
            return 1.0
        return -math.expm1(-self.w2 * self.gamma_th_prime)

    @property
    def lambda_eff(self) -> float:
        return self.harvest_rate * self.nack_prob

    @property
    def source_snr(self) -> float:
        return self.source_power / self.noise_power


def _nack_prob(w2: float, gamma_prime: float | None) -> float:
    return 1.0 if gamma_prime is None else -math.expm1(-w2 * gamma_prime)


def draw_for_phi(phi: float, harvest_rate: float, nack_prob: float) -> float:
    """Energy draw M that yields stability factor ``phi``."""
    return phi / (harvest_rate * nack_prob)


def derive_constants(params: SystemParams, mode: Mode | str | None = None,
                     gamma_th_prime: float | None = None) -> DerivedConstants:
    """Compute W1..W4, thresholds, phi and M for ``params``.

    ``mode`` overrides ``params.mode`` (schemes fix their own signalling).
    ``gamma_th_prime`` overrides the incremental ACK threshold; it must not
    be below the decoding threshold.
    """
    mode = Mode(mode) if mode is not None else params.mode
    a = params.alpha
    sigma2, ps = params.noise_power, params.source_power
    gamma = gamma_threshold(params.rate)
    if mode is Mode.NON_INCREMENTAL:
        if gamma_th_prime is not None:
            raise ConfigError("gamma_th_prime override needs incremental mode")
        gprime = None
    else:
        gprime = gamma if gamma_th_prime is None else float(gamma_th_prime)
        if not gprime >= gamma:
            raise ConfigError("gamma_th_prime must be >= gamma_th")

    w2 = sigma2 * params.d_sd ** a / ps
    w3 = sigma2 * params.d_rd ** a / 2.0
    w4 = sigma2 * params.d_sr ** a / ps
    lam = params.harvest_rate
    nack = _nack_prob(w2, gprime)
    if params.buffer_m is not None:
        m = params.buffer_m
        phi = m * lam * nack
    else:
        phi = params.buffer_phi
        m = draw_for_phi(phi, lam, nack)
    if not (math.isfinite(m) and m > 0):
        raise ConfigError(f"energy draw is not positive and finite: M={m!r}")
    return DerivedConstants(
        w1=w3 / m, w2=w2, w3=w3, w4=w4, gamma_th=gamma, gamma_th_prime=gprime,
        phi=phi, m_draw=m, rate=params.rate, harvest_rate=lam,
        noise_power=sigma2, source_power=ps,
        gain_sd=params.d_sd ** -a, gain_sr=params.d_sr ** -a, gain_rd=params.d_rd ** -a)


# --- JSON configuration -----------------------------------------------------

_TOP_KEYS = {"geometry", "alpha", "noise_power_db", "source_snr_db", "rate_bpcu",
             "harvest_mean_db", "buffer", "mode"}
_REQUIRED = _TOP_KEYS - {"mode"}


def params_from_config(cfg: Mapping[str, Any]) -> SystemParams:
    """Build :class:`SystemParams` from a parsed configuration mapping."""
    if not isinstance(cfg, Mapping):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(cfg) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    missing = _REQUIRED - set(cfg)
    if missing:
        raise ConfigError(f"missing configuration keys: {sorted(missing)}")

    geo = cfg["geometry"]
    if not isinstance(geo, Mapping):
        raise ConfigError("geometry must be an object")
    coord_keys, dist_keys = {"src", "relay", "dst"}, {"d_sr", "d_rd", "d_sd"}
    if set(geo) == coord_keys:
        geo_kw = {"src": geo["src"], "relay": geo["relay"], "dst": geo["dst"]}
    elif set(geo) == dist_keys:
        geo_kw = {k: geo[k] for k in dist_keys}
    else:
        raise ConfigError(
            "geometry must have exactly {src, relay, dst} or {d_sr, d_rd, d_sd}, "
            f"got {sorted(geo)}")

    buf = cfg["buffer"]
    if not isinstance(buf, Mapping) or set(buf) not in ({"m"}, {"phi"}):
        raise ConfigError("buffer must be {\"m\": ...} or {\"phi\": ...}")

    noise = db_to_linear(cfg["noise_power_db"])
    kw = dict(
        alpha=cfg["alpha"],
        noise_power=noise,
        source_power=noise * db_to_linear(cfg["source_snr_db"]),
        rate=cfg["rate_bpcu"],
        harvest_mean=db_to_linear(cfg["harvest_mean_db"]),
        buffer_m=buf.get("m"),
        buffer_phi=buf.get("phi"),
        mode=cfg.get("mode", "incremental"),
    )
    if "src" in geo_kw:
        try:
            return SystemParams.from_positions(**geo_kw, **kw)
        except TypeError as exc:
            raise ConfigError(f"bad coordinates: {exc}") from exc
    return SystemParams(**geo_kw, **kw)


def params_to_config(params: SystemParams) -> dict:
    """Inverse of :func:`params_from_config` (dB fields recomputed)."""
    if params.positions is not None:
        src, relay, dst = params.positions
        geo = {"src": list(src), "relay": list(relay), "dst": list(dst)}
    else:
        geo = {"d_sr": params.d_sr, "d_rd": params.d_rd, "d_sd": params.d_sd}
    buf = {"m": params.buffer_m} if params.buffer_m is not None else {"phi": params.buffer_phi}
    return {
        "geometry": geo,
        "alpha": params.alpha,
        "noise_power_db": linear_to_db(params.noise_power),
        "source_snr_db": linear_to_db(params.source_snr),
        "rate_bpcu": params.rate,
        "harvest_mean_db": linear_to_db(params.harvest_mean),
        "buffer": buf,
        "mode": params.mode.value,
    }


def load_config(path: str | Path) -> SystemParams:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return params_from_config(cfg)


def default_scenario(snr_db: float = 25.0, **overrides) -> SystemParams:
    """Default scenario: S (0,0), R (1,0), D (4,0), alpha 3, noise -40 dB,
    mean harvest -10 dB, phi 1.1, R0 1.5 bpcu."""
    noise = db_to_linear(-40.0)
    kw = dict(alpha=3.0, noise_power=noise, source_power=noise * db_to_linear(snr_db),
              rate=1.5, harvest_mean=db_to_linear(-10.0), buffer_phi=1.1,
              mode=Mode.INCREMENTAL)
    kw.update(overrides)
    if "buffer_m" in overrides:
        kw["buffer_phi"] = None
    return SystemParams.from_positions((0.0, 0.0), (1.0, 0.0), (4.0, 0.0), **kw)
