"""Per-pulse Monte Carlo oracle for the analytic rate and correlation model.

Every pulse draws a pair number n from the source distribution, thins the
photons through bucket detectors, and (in the splitter configuration)
divides the signal photons binomially between two branches.  Integer
tallies of clicks, coincidences, and emission moments are merged across
chunks by plain addition, so results are exact and associative.

Reproducibility contract: the random stream is a counter-based generator
(Philox) indexed by pulse, not by worker.  Pulse i always consumes the
same fixed window of the key stream, so identical configurations produce
bit-identical tallies regardless of chunk size or thread count.  Chunk
boundaries are kept at multiples of four pulses because the generator
seeks in four-word blocks.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .detector_model import (
    DetectorChain,
    click_probability,
    coincidence_rate,
    detected_vs_incident,
    singles_rate,
    split_coincidences,
)
from .correlation import g2_heralded_predicted
from .errors import ResourceLimitError
from .photon_statistics import validate_emission_parameter

MODES = ("two_arm", "heralded_split", "saturation")

DEFAULT_CHUNK_PULSES = 1 << 21

# words of the key stream consumed per pulse, by mode
_STRIDE = {"two_arm": 3, "heralded_split": 5, "saturation": 2}

_TWO53 = float(1 << 53)

_TALLY_FIELDS = (
    "clicks1",
    "clicks2",
    "clicks3",
    "pair12",
    "pair13",
    "triple123",
    "emitted",
    "emitted_sq",
    "emitted_cu",
    "pulses_with_emission",
    "clicked_photons",
)

# Stirling numbers of the second kind S(k, j) for k = 1..6; they convert
# factorial moments into raw moments, E[n^k] = sum_j S(k,j) * fm_j.
_STIRLING = {
    1: (1,),
    2: (1, 1),
    3: (1, 3, 1),
    4: (1, 7, 6, 1),
    5: (1, 15, 25, 10, 1),
    6: (1, 31, 90, 65, 15, 1),
}


@dataclass(frozen=True)
class SimConfig:
    """Complete description of one simulation; equal configs give equal output.

    mode "two_arm" uses x and chain (eta1, eta2); "heralded_split" uses x
    and chain (eta1, eta2, eta3) where eta2/eta3 are post-splitter branch
    efficiencies; "saturation" uses source_kind ("thermal" or "coherent"),
    mean, and chain.eta1 as the single detector efficiency.
    """

    mode: str
    pulses: int
    seed: int
    x: float | None = None
    chain: DetectorChain | None = None
    source_kind: str | None = None
    mean: float | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if not isinstance(self.pulses, int) or self.pulses < 1:
            raise ValueError(f"pulses must be a positive integer, got {self.pulses!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an integer in [0, 2**64)")
        if self.mode in ("two_arm", "heralded_split"):
            if self.x is None or self.chain is None:
                raise ValueError(f"mode {self.mode} requires x and chain")
            validate_emission_parameter(self.x)
            if self.chain.eta2 is None:
                raise ValueError(f"mode {self.mode} requires chain.eta2")
            if self.mode == "heralded_split" and self.chain.eta3 is None:
                raise ValueError("heralded_split requires chain.eta3")
        else:
            if self.source_kind not in ("thermal", "coherent"):
                raise ValueError(
                    "saturation mode requires source_kind thermal|coherent"
                )
            if self.mean is None or self.mean < 0:
                raise ValueError("saturation mode requires mean >= 0")
            if self.chain is None:
                raise ValueError("saturation mode requires chain.eta1")


@dataclass(frozen=True)
class SimCounts:
    """Exact integer tallies from one simulation.

    clicks1..3 are per-detector singles; pair12/pair13 are coincidences of
    detector 1 with each branch; triple123 is the three-fold coincidence.
    emitted, emitted_sq, emitted_cu accumulate n, n^2, n^3 of the per-pulse
    emission; pulses_with_emission counts pulses with n >= 1; and
    clicked_photons accumulates n over pulses whose detector clicked
    (saturation mode only).
    """

    pulses: int
    clicks1: int = 0
    clicks2: int = 0
    clicks3: int = 0
    pair12: int = 0
    pair13: int = 0
    triple123: int = 0
    emitted: int = 0
    emitted_sq: int = 0
    emitted_cu: int = 0
    pulses_with_emission: int = 0
    clicked_photons: int = 0

    def fraction(self, field: str) -> float:
        return getattr(self, field) / self.pulses

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def geometric_sampler(x: float, rng: np.random.Generator, size=None):
    """Draw pair numbers from Pr(n) = (1 - x) x**n by CDF inversion.

    n = floor(log(u) / log(x)) for u uniform on (0, 1]; always 0 at x = 0.
    """
    x = validate_emission_parameter(x)
    u = 1.0 - rng.random(size)
    if x == 0.0:
        zero = np.zeros_like(np.asarray(u), dtype=np.int64)
        return int(zero) if size is None else zero
    n = np.floor(np.log(u) / math.log(x)).astype(np.int64)
    return int(n) if size is None else n


def _uniforms(words: np.ndarray) -> np.ndarray:
    """Map raw 64-bit words to floats in (0, 1]."""
    return (
        np.right_shift(words, np.uint64(11)).astype(np.float64) + 1.0
    ) / _TWO53


def _geometric_from_uniform(u: np.ndarray, x: float) -> np.ndarray:
    if x == 0.0:
        return np.zeros(len(u), dtype=np.int64)
    return np.floor(np.log(u) / math.log(x)).astype(np.int64)


def _binomial_half(n: np.ndarray, words: np.ndarray) -> np.ndarray:
    """k ~ Binomial(n, 1/2) for each n, driven by one word per draw.

    For n <= 63 the k value is the popcount of the low n bits, which is an
    exact fair-coin count per photon.  Larger n (rare) fall back to CDF
    inversion on the uniform derived from the same word, so the result
    stays a pure function of (n, word).
    """
    k = np.zeros_like(n)
    fast = n <= 63
    if fast.any():
        nf = n[fast].astype(np.uint64)
        mask = (np.uint64(1) << nf) - np.uint64(1)
        k[fast] = np.bitwise_count(words[fast] & mask).astype(np.int64)
    if not fast.all():
        slow = np.nonzero(~fast)[0]
        u = _uniforms(words[slow])
        ns = n[slow]
        for nv in np.unique(ns):
            sel = ns == nv
            kk = np.arange(nv + 1, dtype=np.float64)
            logpmf = (
                gammaln(nv + 1.0)
                - gammaln(kk + 1.0)
                - gammaln(nv - kk + 1.0)
                - nv * math.log(2.0)
            )
            cdf = np.cumsum(np.exp(logpmf))
            cdf[-1] = 1.0
            k[slow[sel]] = np.searchsorted(cdf, u[sel], side="left")
    return k


def _poisson_cdf_table(mean: float) -> np.ndarray:
    """Cumulative Poisson table long enough that the tail is below 2**-53."""
    if mean == 0.0:
        return np.array([1.0])
    n_max = int(mean + 12.0 * math.sqrt(mean) + 40.0)
    if n_max > 200_000:
        raise ResourceLimitError(f"Poisson mean {mean} too large to tabulate")
    n = np.arange(n_max + 1, dtype=np.float64)
    logpmf = n * math.log(mean) - mean - gammaln(n + 1.0)
    cdf = np.cumsum(np.exp(logpmf))
    cdf[-1] = 1.0
    return cdf


def _emission_tallies(n: np.ndarray) -> tuple[int, int, int, int]:
    return (
        int(n.sum()),
        int((n * n).sum()),
        int((n * n * n).sum()),
        int(np.count_nonzero(n)),
    )


def _run_chunk(config: SimConfig, start: int, m: int) -> np.ndarray:
    stride = _STRIDE[config.mode]
    bit = np.random.Philox(key=config.seed)
    bit.advance((stride * start) // 4)
    words = bit.random_raw(stride * m).reshape(m, stride)
    tally = dict.fromkeys(_TALLY_FIELDS, 0)

    if config.mode == "saturation":
        eta = config.chain.eta1
        if config.source_kind == "thermal":
            x = config.mean / (1.0 + config.mean)
            n = _geometric_from_uniform(_uniforms(words[:, 0]), x)
        else:
            cdf = _poisson_cdf_table(config.mean)
            n = np.searchsorted(cdf, _uniforms(words[:, 0]), side="left").astype(
                np.int64
            )
        clicked = _uniforms(words[:, 1]) < click_probability(n, eta)
        tally["clicks1"] = int(clicked.sum())
        tally["clicked_photons"] = int(n[clicked].sum())
    else:
        n = _geometric_from_uniform(_uniforms(words[:, 0]), config.x)
        pos = np.nonzero(n)[0]
        npos = n[pos]
        if config.mode == "two_arm":
            c1 = _uniforms(words[pos, 1]) < click_probability(npos, config.chain.eta1)
            c2 = _uniforms(words[pos, 2]) < click_probability(npos, config.chain.eta2)
            tally["clicks1"] = int(c1.sum())
            tally["clicks2"] = int(c2.sum())
            tally["pair12"] = int((c1 & c2).sum())
        else:
            k3 = _binomial_half(npos, words[pos, 1])
            k2 = npos - k3
            c1 = _uniforms(words[pos, 2]) < click_probability(npos, config.chain.eta1)
            c2 = _uniforms(words[pos, 3]) < click_probability(k2, config.chain.eta2)
            c3 = _uniforms(words[pos, 4]) < click_probability(k3, config.chain.eta3)
            tally["clicks1"] = int(c1.sum())
            tally["clicks2"] = int(c2.sum())
            tally["clicks3"] = int(c3.sum())
            tally["pair12"] = int((c1 & c2).sum())
            tally["pair13"] = int((c1 & c3).sum())
            tally["triple123"] = int((c1 & c2 & c3).sum())

    (
        tally["emitted"],
        tally["emitted_sq"],
        tally["emitted_cu"],
        tally["pulses_with_emission"],
    ) = _emission_tallies(n)
    return np.array([tally[f] for f in _TALLY_FIELDS], dtype=np.int64)


def _max_draw(config: SimConfig) -> int:
    """Largest photon number a single pulse can produce."""
    if config.mode == "saturation" and config.source_kind == "coherent":
        return len(_poisson_cdf_table(config.mean)) - 1
    if config.mode == "saturation":
        x = config.mean / (1.0 + config.mean)
    else:
        x = config.x
    if x == 0.0:
        return 0
    return int(math.floor(53.0 * math.log(2.0) / -math.log(x)))


def resolve_threads(threads: int | None = None) -> int:
    """Worker count, capped by the SPDC_STATS_THREADS environment variable."""
    env = os.environ.get("SPDC_STATS_THREADS")
    cap = None
    if env is not None:
        cap = int(env)
        if cap < 1:
            raise ValueError("SPDC_STATS_THREADS must be >= 1")
    t = threads if threads is not None else (os.cpu_count() or 1)
    if cap is not None:
        t = min(t, cap)
    return max(1, int(t))


def simulate(
    config: SimConfig,
    threads: int | None = None,
    chunk_pulses: int = DEFAULT_CHUNK_PULSES,
) -> SimCounts:
    """Run the simulation described by config and return exact tallies.

    threads and chunk_pulses affect speed only, never the result.
    chunk_pulses must be a positive multiple of 4 (stream-seek alignment).
    """
    if chunk_pulses < 4 or chunk_pulses % 4 != 0:
        raise ValueError("chunk_pulses must be a positive multiple of 4")
    worst = _max_draw(config)
    if config.pulses * max(worst, 1) ** 3 >= 2**63:
        raise ResourceLimitError(
            f"{config.pulses} pulses with draws up to {worst} photons "
            "would overflow 64-bit tallies"
        )
    jobs = [
        (start, min(chunk_pulses, config.pulses - start))
        for start in range(0, config.pulses, chunk_pulses)
    ]
    nthreads = resolve_threads(threads)
    if nthreads == 1 or len(jobs) == 1:
        parts = [_run_chunk(config, s, m) for s, m in jobs]
    else:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            parts = list(pool.map(lambda j: _run_chunk(config, *j), jobs))
    total = np.sum(parts, axis=0, dtype=np.int64)
    return SimCounts(
        pulses=config.pulses, **dict(zip(_TALLY_FIELDS, total.tolist()))
    )


def g2_with_stderr(counts: SimCounts) -> tuple[float, float] | None:
    """Counting-estimator g2 from split-mode tallies, with its delta-method
    standard error.

    Returns None when no pair coincidences were seen.  The covariance of
    the per-pulse indicator vector (click1, pair12, pair13, triple123)
    uses the nesting triple <= pair <= click, so the error is exact to
    O(1/pulses) without resampling.
    """
    p = counts.pulses
    s = counts.clicks1 / p
    a = counts.pair12 / p
    b = counts.pair13 / p
    t = counts.triple123 / p
    if a + b == 0:
        return None
    ab = a + b
    g = 2.0 * s * t / ab**2
    grad = np.array(
        [
            2.0 * t / ab**2,
            -4.0 * s * t / ab**3,
            -4.0 * s * t / ab**3,
            2.0 * s / ab**2,
        ]
    )
    cov = np.array(
        [
            [s * (1 - s), a * (1 - s), b * (1 - s), t * (1 - s)],
            [a * (1 - s), a * (1 - a), t - a * b, t * (1 - a)],
            [b * (1 - s), t - a * b, b * (1 - b), t * (1 - b)],
            [t * (1 - s), t * (1 - a), t * (1 - b), t * (1 - t)],
        ]
    )
    var = float(grad @ cov @ grad) / p
    return g, math.sqrt(max(var, 0.0))


def _raw_moment(kind: str, mean_param: float, k: int) -> float:
    """E[n^k] for the geometric (kind="thermal", param x) or Poisson
    (kind="coherent", param nu) distribution, k <= 6."""
    coeffs = _STIRLING[k]
    if kind == "thermal":
        mu = mean_param / (1.0 - mean_param)  # param is x
        return sum(
            s * math.factorial(j + 1) * mu ** (j + 1)
            for j, s in enumerate(coeffs)
        )
    return sum(s * mean_param ** (j + 1) for j, s in enumerate(coeffs))


def _expected_y2(config: SimConfig) -> float:
    """E[(n * click)^2] = E[n^2] - E[n^2 (1-eta)^n] for saturation mode."""
    eta = config.chain.eta1
    z = 1.0 - eta
    if config.source_kind == "thermal":
        x = config.mean / (1.0 + config.mean)
        m2 = _raw_moment("thermal", x, 2)
        # E[n^2 z^n] for geometric: (1-x) x z (1 + x z) / (1 - x z)^3
        xz = x * z
        damped = (1.0 - x) * xz * (1.0 + xz) / (1.0 - xz) ** 3
        return m2 - damped
    nu = config.mean
    m2 = _raw_moment("coherent", nu, 2)
    damped = math.exp(nu * (z - 1.0)) * (nu * z + (nu * z) ** 2)
    return m2 - damped


def analytic_expectations(config: SimConfig) -> dict[str, float]:
    """Per-pulse expected values of every tally the mode produces, plus
    'g2' in heralded_split mode; keys match SimCounts field names."""
    out: dict[str, float] = {}
    if config.mode == "saturation":
        kind, mean, eta = config.source_kind, config.mean, config.chain.eta1
        out["clicks1"] = detected_vs_incident(kind, mean, eta, "click")
        out["clicked_photons"] = detected_vs_incident(kind, mean, eta, "literal")
        param = mean / (1.0 + mean) if kind == "thermal" else mean
        if mean > 0:
            for k, name in ((1, "emitted"), (2, "emitted_sq"), (3, "emitted_cu")):
                out[name] = _raw_moment(kind, param, k)
            out["pulses_with_emission"] = (
                param if kind == "thermal" else -math.expm1(-mean)
            )
        else:
            out.update(
                emitted=0.0, emitted_sq=0.0, emitted_cu=0.0, pulses_with_emission=0.0
            )
        return out

    x, chain = config.x, config.chain
    for k, name in ((1, "emitted"), (2, "emitted_sq"), (3, "emitted_cu")):
        out[name] = _raw_moment("thermal", x, k) if x > 0 else 0.0
    out["pulses_with_emission"] = x
    out["clicks1"] = singles_rate(1.0, x, chain.eta1)
    if config.mode == "two_arm":
        out["clicks2"] = singles_rate(1.0, x, chain.eta2)
        out["pair12"] = coincidence_rate(1.0, x, chain.eta1, chain.eta2)
        return out
    # a photon reaches a branch detector with probability eta_branch / 2,
    # so branch singles compose into plain singles at half efficiency
    out["clicks2"] = singles_rate(1.0, x, chain.eta2 / 2.0)
    out["clicks3"] = singles_rate(1.0, x, chain.eta3 / 2.0)
    rates = split_coincidences(
        1.0, x, chain.eta1, chain.eta2, chain.eta3, method="closed"
    )
    out["pair12"] = rates.cc12
    out["pair13"] = rates.cc13
    out["triple123"] = rates.cc123
    if x > 0:
        out["g2"] = g2_heralded_predicted(x, chain.eta1, chain.eta2, chain.eta3)
    return out


def _variance_per_pulse(config: SimConfig, name: str, expected: dict) -> float:
    """Per-pulse variance of each tallied statistic, from analytic moments."""
    if name in ("clicks1", "clicks2", "clicks3", "pair12", "pair13",
                "triple123", "pulses_with_emission"):
        p = expected[name]
        return p * (1.0 - p)
    if name == "clicked_photons":
        y2 = _expected_y2(config)
        return y2 - expected[name] ** 2
    order = {"emitted": 1, "emitted_sq": 2, "emitted_cu": 3}[name]
    if config.mode == "saturation":
        kind = config.source_kind
        param = (
            config.mean / (1.0 + config.mean) if kind == "thermal" else config.mean
        )
    else:
        kind, param = "thermal", config.x
    if param == 0.0:
        return 0.0
    return _raw_moment(kind, param, 2 * order) - expected[name] ** 2


def compare_with_analytic(
    config: SimConfig, counts: SimCounts
) -> dict[str, dict[str, float]]:
    """Side-by-side MC estimates vs analytic expectations with sigma distances.

    Each entry maps a quantity name to {mc, analytic, stderr, sigma}.
    sigma is 0 when the standard error vanishes and the values agree
    exactly, inf when they differ with zero standard error.
    """
    expected = analytic_expectations(config)
    report: dict[str, dict[str, float]] = {}
    for name, target in expected.items():
        if name == "g2":
            est = g2_with_stderr(counts)
            if est is None or est[1] == 0.0:
                # too few coincidences to form the ratio estimator and its
                # error; the raw tallies above still constrain the run
                continue
            mc, se = est
        else:
            mc = counts.fraction(name)
            se = math.sqrt(
                max(_variance_per_pulse(config, name, expected), 0.0)
                / counts.pulses
            )
        if se == 0.0:
            sigma = 0.0 if mc == target else math.inf
        else:
            sigma = abs(mc - target) / se
        report[name] = {
            "mc": mc,
            "analytic": target,
            "stderr": se,
            "sigma": sigma,
        }
    return report
