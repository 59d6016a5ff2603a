"""Monte Carlo simulation of the slot protocol and the relay's buffer chain.

Every slot draws three channel power gains and one harvest, all exponential
via the inverse CDF. The destination ACKs when the direct SNR clears the ACK
threshold (never, for non-incremental signalling); otherwise the relay
assists with whatever its buffer policy allows, and the destination combines
the direct and relayed SNRs. Harvested energy reaches the buffer at slot
end, so it is usable from the next slot on.

Draws are generated in vectorised chunks from a PCG64 substream keyed by
``(seed, task_index)``; the chain itself advances in a compiled loop
(:func:`_advance`) whose arithmetic matches :func:`step` operation for
operation, so the two agree bit for bit on the same draws.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import ConfigError, ConsistencyError, DomainError
from .limitdist import StabilityClass, classify
from .params import BufferPolicy, DerivedConstants, PolicyKind, SystemParams, derive_constants

BURN_IN_STABLE = 10_000
BURN_IN_UNSTABLE = 100_000
MAX_SAMPLES = 100_000
CHUNK = 1 << 16

# kernel policy codes
_IBEP, _IOFP, _HU, _DT = 0, 1, 2, 3

# counter slots filled by the kernel
_C_OUTAGE, _C_ACK, _C_RELAY_OK, _C_SILENT, _C_DECODE_FAIL, _C_FULL_DRAW, \
    _C_BUF_FULL, _C_NACK, _C_DT_OK = range(9)
_N_COUNTERS = 9


@dataclass
class ChainState:
    buffer_energy: float = 0.0
    slot_index: int = 0


@dataclass(frozen=True)
class SlotDraws:
    g_sd: float
    g_sr: float
    g_rd: float
    harvest: float


@dataclass(frozen=True)
class IntervalOutcome:
    ack: bool
    relay_transmitted: bool
    relay_energy: float
    outage: bool
    rate_delivered: float


@dataclass(frozen=True)
class SimEstimate:
    policy: PolicyKind
    p_out_hat: float
    se_p_out: float
    throughput_hat: float
    se_throughput: float
    n_slots: int
    n_burn_in: int
    buffer_samples: np.ndarray = field(repr=False)
    counters: dict = field(default_factory=dict)
    conservation_error: float = 0.0
    final_buffer: float = 0.0
    se_p_out_batch: float = math.nan
    se_throughput_batch: float = math.nan

    @property
    def n_eff(self) -> int:
        return self.n_slots - self.n_burn_in

    @property
    def prob_buffer_full(self) -> float:
        """Fraction of post-burn-in slots starting with ``B >= M``."""
        return self.counters["buffer_ge_m"] / self.n_eff

    @property
    def full_draw_fraction(self) -> float:
        """Fraction of post-burn-in NACK slots in which the relay drew ``M``."""
        nack = self.counters["nack"]
        return self.counters["full_draws"] / nack if nack else math.nan


def make_rng(seed: int, task_index: int = 0) -> np.random.Generator:
    """PCG64 generator for substream ``(seed, task_index)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(task_index)])))


def _means(c: DerivedConstants) -> np.ndarray:
    return np.array([c.gain_sd, c.gain_sr, c.gain_rd, 1.0 / c.harvest_rate])


def draw_block(rng: np.random.Generator, c: DerivedConstants, n: int) -> np.ndarray:
    """``(n, 4)`` array of ``g_sd, g_sr, g_rd, harvest`` draws (inverse CDF)."""
    u = rng.random((n, 4))
    return -np.log1p(-u) * _means(c)


def draw_slot(rng: np.random.Generator, c: DerivedConstants, size: int | None = None):
    """One slot's draws (or ``size`` slots as a ``(size, 4)`` array)."""
    if size is not None:
        return draw_block(rng, c, size)
    g = draw_block(rng, c, 1)[0]
    return SlotDraws(float(g[0]), float(g[1]), float(g[2]), float(g[3]))


def _code(policy: PolicyKind) -> int:
    bp = policy.buffer_policy
    if bp is BufferPolicy.IBEP:
        return _IBEP
    if bp is BufferPolicy.IOFP:
        return _IOFP
    return _HU if policy in (PolicyKind.HU, PolicyKind.NIHU) else _DT


def step(state: ChainState, draws: SlotDraws, policy, c: DerivedConstants):
    """Advance one slot; returns ``(new_state, IntervalOutcome)``."""
    policy = PolicyKind(policy)
    code = _code(policy)
    sigma2, ps, g_th = c.noise_power, c.source_power, c.gamma_th
    r0 = c.rate
    b = state.buffer_energy
    snr_sd = ps * draws.g_sd / sigma2
    nxt = state.slot_index + 1

    if code == _DT:
        ok = snr_sd >= g_th
        return (ChainState(b, nxt),
                IntervalOutcome(False, False, 0.0, not ok, r0 if ok else 0.0))

    incremental = c.gamma_th_prime is not None and policy.incremental
    if incremental and snr_sd >= c.gamma_th_prime:
        if code != _HU:
            b = b + draws.harvest
        return ChainState(b, nxt), IntervalOutcome(True, False, 0.0, False, r0)

    m = c.m_draw
    if code == _IBEP:
        e = b if b < m else m
        b = b - e + draws.harvest
        p_r = 2.0 * e
    elif code == _IOFP:
        e = m if b >= m else 0.0
        b = b - e + draws.harvest
        p_r = 2.0 * e
    else:
        e = draws.harvest
        p_r = e
    if b < 0.0:
        raise ConsistencyError(f"buffer went negative: {b!r}")
    snr_sr = ps * draws.g_sr / sigma2
    ok = snr_sr >= g_th and snr_sd + p_r * draws.g_rd / sigma2 >= g_th
    return (ChainState(b, nxt),
            IntervalOutcome(False, e > 0.0, e, not ok, 0.5 * r0 if ok else 0.0))


@numba.njit(cache=True, nogil=True)
def _advance(draws, code, incremental, ps, sigma2, g_th, g_prime, m, b, slot0, burn, k_dec,
             counters, sums, samples, n_samp):
    """Advance the chain over one chunk of draws.

    ``sums`` holds Kahan accumulators ``[harvest, harvest_c, drained, drained_c]``.
    Returns ``(buffer, n_samples, error_flag)``.
    """
    n = draws.shape[0]
    cap = samples.shape[0]
    for j in range(n):
        slot = slot0 + j
        post = slot >= burn
        g_sd = draws[j, 0]
        x = draws[j, 3]
        if post and code <= 1:
            if (slot - burn) % k_dec == 0 and n_samp < cap:
                samples[n_samp] = b
                n_samp += 1
            if b >= m:
                counters[6] += 1
        snr_sd = ps * g_sd / sigma2
        if code == 3:
            if post:
                if snr_sd >= g_th:
                    counters[8] += 1
                else:
                    counters[0] += 1
            continue
        if incremental and snr_sd >= g_prime:
            if code != 2:
                b = b + x
                y = x - sums[1]
                t = sums[0] + y
                sums[1] = (t - sums[0]) - y
                sums[0] = t
            if post:
                counters[1] += 1
            continue
        if code == 0:
            e = b if b < m else m
            b = b - e + x
            p_r = 2.0 * e
        elif code == 1:
            e = m if b >= m else 0.0
            b = b - e + x
            p_r = 2.0 * e
        else:
            e = x
            p_r = e
        if b < 0.0:
            return b, n_samp, 1
        if code != 2:
            y = x - sums[1]
            t = sums[0] + y
            sums[1] = (t - sums[0]) - y
            sums[0] = t
            y = e - sums[3]
            t = sums[2] + y
            sums[3] = (t - sums[2]) - y
            sums[2] = t
        snr_sr = ps * draws[j, 1] / sigma2
        ok = snr_sr >= g_th and snr_sd + p_r * draws[j, 2] / sigma2 >= g_th
        if post:
            counters[7] += 1
            if ok:
                counters[2] += 1
            else:
                counters[0] += 1
            if not e > 0.0:
                counters[3] += 1
            if snr_sr < g_th:
                counters[4] += 1
            if code <= 1 and e == m:
                counters[5] += 1
    return b, n_samp, 0


def default_burn_in(c: DerivedConstants, policy: PolicyKind) -> int:
    if policy.buffer_policy is None:
        return 0
    return BURN_IN_STABLE if classify(c) is StabilityClass.STABLE else BURN_IN_UNSTABLE


def run(params: SystemParams | None, policy, n_slots: int, burn_in: int | None = None,
        seed: int = 0, task_index: int = 0, constants: DerivedConstants | None = None,
        max_samples: int = MAX_SAMPLES, chunk: int = CHUNK) -> SimEstimate:
    """Simulate ``n_slots`` slots of ``policy`` from an empty buffer.

    Constants default to ``derive_constants(params, mode=policy.mode)``; pass
    ``constants`` to simulate a hand-built operating point. Estimates use the
    slots after ``burn_in``; buffer samples are taken every
    ``k = max(1, (n_slots - burn_in) // max_samples)`` slots.
    """
    policy = PolicyKind(policy)
    if constants is None:
        if params is None:
            raise ConfigError("need params or constants")
        constants = derive_constants(params, mode=policy.mode)
    c = constants
    if policy.relayed and c.incremental != policy.incremental:
        raise ConsistencyError(f"{policy.value} needs constants in {policy.mode.value} mode")
    n_slots = int(n_slots)
    burn = default_burn_in(c, policy) if burn_in is None else int(burn_in)
    if burn < 0 or n_slots < burn + 1000:
        raise ConfigError(f"need n_slots >= burn_in + 1000 (n_slots={n_slots}, burn_in={burn})")
    n_eff = n_slots - burn
    k_dec = max(1, n_eff // max_samples)
    code = _code(policy)

    rng = make_rng(seed, task_index)
    counters = np.zeros(_N_COUNTERS, dtype=np.int64)
    sums = np.zeros(4)
    samples = np.empty(max_samples if code <= 1 else 0)
    n_samp = 0
    b = 0.0
    g_prime = c.gamma_th_prime if c.gamma_th_prime is not None else math.inf
    batch_out, batch_rate, batch_n = [], [], []
    done = 0
    while done < n_slots:
        before = int(counters[_C_OUTAGE])
        full0 = int(counters[_C_ACK] + counters[_C_DT_OK])
        half0 = int(counters[_C_RELAY_OK])
        n = min(chunk, n_slots - done)
        block = draw_block(rng, c, n)
        b, n_samp, flag = _advance(block, code, policy.incremental and c.incremental,
                                   c.source_power, c.noise_power, c.gamma_th, g_prime,
                                   c.m_draw, b, done, burn, k_dec, counters, sums, samples,
                                   n_samp)
        if flag:
            raise ConsistencyError(f"buffer went negative: {b!r}")
        post = min(n, done + n - burn)
        if post > 0:
            batch_out.append(int(counters[_C_OUTAGE]) - before)
            batch_rate.append(c.rate * (int(counters[_C_ACK] + counters[_C_DT_OK]) - full0)
                              + 0.5 * c.rate * (int(counters[_C_RELAY_OK]) - half0))
            batch_n.append(post)
        done += n

    r0 = c.rate
    n_out = int(counters[_C_OUTAGE])
    p = n_out / n_eff
    full = int(counters[_C_ACK] + counters[_C_DT_OK])
    half = int(counters[_C_RELAY_OK])
    tau = (r0 * full + 0.5 * r0 * half) / n_eff
    second = (r0 * r0 * full + 0.25 * r0 * r0 * half) / n_eff
    var_tau = max(second - tau * tau, 0.0)

    sizes = np.array(batch_n, dtype=float)
    se_batch = _batch_se(np.array(batch_out, dtype=float), sizes)
    se_tau_batch = _batch_se(np.array(batch_rate), sizes)

    harvest, drained = sums[0], sums[2]
    cons = abs(0.0 + harvest - drained - b) / harvest if harvest > 0 else 0.0
    named = {
        "outage": n_out,
        "ack": int(counters[_C_ACK]),
        "relay_success": half,
        "relay_silent": int(counters[_C_SILENT]),
        "decode_failure": int(counters[_C_DECODE_FAIL]),
        "full_draws": int(counters[_C_FULL_DRAW]),
        "buffer_ge_m": int(counters[_C_BUF_FULL]),
        "nack": int(counters[_C_NACK]),
        "direct_success": int(counters[_C_DT_OK]),
        "harvest_total": float(harvest),
        "drained_total": float(drained),
    }
    return SimEstimate(policy=policy, p_out_hat=p, se_p_out=math.sqrt(p * (1.0 - p) / n_eff),
                       throughput_hat=tau, se_throughput=math.sqrt(var_tau / n_eff),
                       n_slots=n_slots, n_burn_in=burn, buffer_samples=samples[:n_samp].copy(),
                       counters=named, conservation_error=cons, final_buffer=float(b),
                       se_p_out_batch=se_batch, se_throughput_batch=se_tau_batch)


def _batch_se(hits: np.ndarray, sizes: np.ndarray) -> float:
    """Batch-means standard error of a per-slot mean (one batch per chunk).

    ``hits`` holds each batch's total (outage count or delivered rate) and
    ``sizes`` its number of slots.

    Unlike the binomial standard error this accounts for the buffer chain's
    autocorrelation, provided a chunk is long compared with its mixing time.
    """
    k = hits.size
    if k < 2:
        return math.nan
    total = sizes.sum()
    p = hits.sum() / total
    return float(math.sqrt(k / (k - 1) * np.sum((hits - p * sizes) ** 2)) / total)


# --- empirical distribution checks ----------------------------------------------

@dataclass(frozen=True)
class ECDF:
    """Empirical CDF of a sample (sorted values, right-continuous steps)."""

    x: np.ndarray

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        v = np.searchsorted(self.x, t, side="right") / self.x.size
        return float(v) if v.ndim == 0 else v

    @property
    def n(self) -> int:
        return self.x.size


def ecdf(samples, min_samples: int = 100) -> ECDF:
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    if x.size == 0:
        raise DomainError("empty sample")
    if x.size < min_samples:
        raise DomainError(f"need at least {min_samples} samples, got {x.size}")
    return ECDF(x)


def ks_distance(emp: ECDF, cdf) -> float:
    """``sup |ECDF - cdf|`` checked at each sample point and its left limit."""
    x = emp.x
    n = x.size
    f = np.asarray(cdf(x), dtype=float)
    # at tied values the ECDF jumps once, to the last index of the tie
    hi = np.searchsorted(x, x, side="right") / n
    lo = np.searchsorted(x, x, side="left") / n
    return float(max(np.max(np.abs(hi - f)), np.max(np.abs(f - lo))))
