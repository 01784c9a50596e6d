"""Bucket-detector click statistics for photon-pair sources.

A bucket detector of efficiency eta fires on at least one detection out of
n incident photons: P(click | n) = 1 - (1 - eta)**n.  Averaging that over
the per-pulse photon-number distribution gives singles rates, two-detector
coincidence rates, and the rates seen when one arm is divided by a
balanced splitter onto two detectors.

Closed forms exist for every rate here because the geometric distribution
has the probability generating function G(z) = (1 - x) / (1 - z x); they
are the production path.  Every function also offers an explicit series
path (``method="series"``) that evaluates the defining sums term by term,
which the tests cross-check against the closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .photon_statistics import (
    EPS_TRUNC_DEFAULT,
    CoherentDistribution,
    validate_emission_parameter,
    weighted_pair_sum,
)

# Exact integer binomials are used up to this n; beyond it the weights
# C(n, k) / 2**n are formed in log space to avoid overflow.
_EXACT_BINOM_MAX_N = 60


def validate_efficiency(eta: float, name: str = "eta") -> float:
    eta = float(eta)
    if not 0.0 <= eta <= 1.0 or math.isnan(eta):
        raise ValueError(f"{name} must lie in [0, 1], got {eta!r}")
    return eta


def click_probability(n, eta: float):
    """P(click | n incident photons) = 1 - (1 - eta)**n.

    Vectorized over n; returns a scalar for scalar n.
    """
    eta = validate_efficiency(eta)
    n_arr = np.asarray(n)
    if not np.issubdtype(n_arr.dtype, np.integer):
        raise ValueError("photon count n must be integer")
    if np.any(n_arr < 0):
        raise ValueError("photon count n must be non-negative")
    with np.errstate(invalid="ignore", divide="ignore"):
        out = -np.expm1(n_arr * np.log1p(-eta))
    out = np.where(n_arr == 0, 0.0, out)
    if np.isscalar(n) or n_arr.ndim == 0:
        return float(out)
    return out


def _pgf(x: float, z: float) -> float:
    """E[z**n] for the geometric pair distribution."""
    return (1.0 - x) / (1.0 - z * x)


@dataclass(frozen=True)
class DetectorChain:
    """Heralding-arm efficiency plus one or two analysis-arm efficiencies.

    eta2 and eta3 are the full branch efficiencies after the balanced
    splitter; the factor 1/2 from the splitter itself is applied by the
    rate formulas, not folded into these numbers.
    """

    eta1: float
    eta2: float | None = None
    eta3: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "eta1", validate_efficiency(self.eta1, "eta1"))
        for name in ("eta2", "eta3"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, validate_efficiency(value, name))


@dataclass(frozen=True)
class RatePrediction:
    """Predicted count rates in counts/s.

    sc1, sc2, cc apply to the two-detector configuration; cc12, cc13,
    cc123 and the heralding singles sc1h apply to the split configuration.
    Fields not applicable to the configuration that produced the
    prediction are None.
    """

    sc1: float | None = None
    sc2: float | None = None
    cc: float | None = None
    cc12: float | None = None
    cc13: float | None = None
    cc123: float | None = None
    sc1h: float | None = None


def singles_rate(
    f: float,
    x: float,
    eta: float,
    method: str = "closed",
    eps_trunc: float = EPS_TRUNC_DEFAULT,
) -> float:
    """Singles click rate of one bucket detector on one arm, counts/s."""
    _validate_rep_rate(f)
    x = validate_emission_parameter(x)
    eta = validate_efficiency(eta)
    if method == "closed":
        # algebraically equal to 1 - E[(1-eta)**n] but free of the
        # subtractive cancellation that form suffers at small eta*x
        return f * eta * x / (1.0 - (1.0 - eta) * x)
    if method == "series":
        return f * weighted_pair_sum(
            x, lambda n: click_probability(n, eta), eps_trunc
        )
    raise ValueError(f"unknown method {method!r}")


def coincidence_rate(
    f: float,
    x: float,
    eta1: float,
    eta2: float,
    method: str = "closed",
    eps_trunc: float = EPS_TRUNC_DEFAULT,
) -> float:
    """Two-detector coincidence rate with one detector per arm, counts/s."""
    _validate_rep_rate(f)
    x = validate_emission_parameter(x)
    eta1 = validate_efficiency(eta1, "eta1")
    eta2 = validate_efficiency(eta2, "eta2")
    z1, z2 = 1.0 - eta1, 1.0 - eta2
    if method == "closed":
        # positive-term rearrangement of
        # 1 - E[z1**n] - E[z2**n] + E[(z1 z2)**n]; exact algebra, but
        # with every term positive it stays accurate at small eta*x
        a = 1.0 - z1 * x
        b = 1.0 - z2 * x
        c = 1.0 - z1 * z2 * x
        bracket = z1 * x / (a * c) + z2 * x / (b * c) + 1.0 / c
        return f * x * eta1 * eta2 * bracket
    if method == "series":
        def weight(n):
            return click_probability(n, eta1) * click_probability(n, eta2)
        return f * weighted_pair_sum(x, weight, eps_trunc)
    raise ValueError(f"unknown method {method!r}")


def two_arm_rates(f: float, x: float, eta1: float, eta2: float) -> RatePrediction:
    """Singles and coincidence rates for the two-detector configuration."""
    return RatePrediction(
        sc1=singles_rate(f, x, eta1),
        sc2=singles_rate(f, x, eta2),
        cc=coincidence_rate(f, x, eta1, eta2),
    )


def _split_weights(n: int) -> np.ndarray:
    """Binomial weights C(n, k) / 2**n for k = 0 .. n."""
    k = np.arange(n + 1)
    if n <= _EXACT_BINOM_MAX_N:
        return np.array([math.comb(n, j) for j in range(n + 1)]) * 2.0 ** (-n)
    logw = (
        gammaln(n + 1.0)
        - gammaln(k + 1.0)
        - gammaln(n - k + 1.0)
        - n * math.log(2.0)
    )
    return np.exp(logw)


def split_coincidences(
    f: float,
    x: float,
    eta1: float,
    eta2: float,
    eta3: float,
    method: str = "series",
    eps_trunc: float = EPS_TRUNC_DEFAULT,
) -> RatePrediction:
    """Rates when one arm feeds a balanced splitter onto two detectors.

    The n photons reaching the splitter divide binomially between the two
    output branches; detector 2 sees k photons with branch efficiency eta2
    and detector 3 sees n - k with eta3.  The default method evaluates the
    binomial average explicitly for each n; the closed form obtained from
    the generating function is available as a cross-check and gives
    identical results to within the truncation tolerance.
    """
    _validate_rep_rate(f)
    x = validate_emission_parameter(x)
    eta1 = validate_efficiency(eta1, "eta1")
    eta2 = validate_efficiency(eta2, "eta2")
    eta3 = validate_efficiency(eta3, "eta3")
    sc1h = singles_rate(f, x, eta1)
    if method == "series":
        cc12, cc13, cc123 = (
            f * weighted_pair_sum(x, w, eps_trunc)
            for w in (
                _split_weight_fn(eta1, eta2, eta3, "12"),
                _split_weight_fn(eta1, eta2, eta3, "13"),
                _split_weight_fn(eta1, eta2, eta3, "123"),
            )
        )
    elif method == "closed":
        z1 = 1.0 - eta1
        a = 1.0 - eta2 / 2.0
        b = 1.0 - eta3 / 2.0
        c = 1.0 - (eta2 + eta3) / 2.0
        def pair(u):
            # E[(1 - z1**n)(1 - u**n)]
            return 1.0 - _pgf(x, z1) - _pgf(x, u) + _pgf(x, z1 * u)
        cc12 = f * pair(a)
        cc13 = f * pair(b)
        cc123 = f * (
            (1.0 - _pgf(x, a) - _pgf(x, b) + _pgf(x, c))
            - (_pgf(x, z1) - _pgf(x, z1 * a) - _pgf(x, z1 * b) + _pgf(x, z1 * c))
        )
    else:
        raise ValueError(f"unknown method {method!r}")
    return RatePrediction(cc12=cc12, cc13=cc13, cc123=cc123, sc1h=sc1h)


def _split_weight_fn(eta1, eta2, eta3, which):
    def weight(ns: np.ndarray) -> np.ndarray:
        out = np.empty(len(ns), dtype=np.float64)
        for i, n in enumerate(ns):
            n = int(n)
            herald = click_probability(n, eta1)
            if herald == 0.0:
                out[i] = 0.0
                continue
            w = _split_weights(n)
            k = np.arange(n + 1)
            p2 = click_probability(k, eta2)
            p3 = click_probability(k[::-1], eta3)  # n - k photons
            if which == "12":
                inner = float((w * p2).sum())
            elif which == "13":
                inner = float((w * p3).sum())
            else:
                inner = float((w * p2 * p3).sum())
            out[i] = herald * inner
        return out
    return weight


def detected_vs_incident(
    source_kind: str,
    mean: float,
    eta: float,
    variant: str = "click",
    method: str = "closed",
    eps_trunc: float = EPS_TRUNC_DEFAULT,
) -> float:
    """Per-pulse detected signal versus mean incident photon number.

    source_kind is "thermal" (geometric distribution of mean ``mean``) or
    "coherent" (Poisson of mean ``mean``).  The "click" variant returns
    the click probability E[1 - (1-eta)**n]; the "literal" variant weights
    each term by the incident photon number, E[n (1 - (1-eta)**n)].
    """
    mean = float(mean)
    if mean < 0 or math.isnan(mean):
        raise ValueError(f"mean photon number must be >= 0, got {mean!r}")
    eta = validate_efficiency(eta)
    if source_kind not in ("thermal", "coherent"):
        raise ValueError(f"unknown source_kind {source_kind!r}")
    if variant not in ("click", "literal"):
        raise ValueError(f"unknown variant {variant!r}")

    if method == "closed":
        if source_kind == "thermal":
            if variant == "click":
                return eta * mean / (1.0 + eta * mean)
            return mean - (1.0 - eta) * mean / (1.0 + eta * mean) ** 2
        if variant == "click":
            return -math.expm1(-eta * mean)
        return mean - mean * (1.0 - eta) * math.exp(-eta * mean)
    if method != "series":
        raise ValueError(f"unknown method {method!r}")

    if source_kind == "thermal":
        x = mean / (1.0 + mean)
        if variant == "click":
            weight = lambda n: click_probability(n, eta)
        else:
            weight = lambda n: n * click_probability(n, eta)
        return weighted_pair_sum(x, weight, eps_trunc)
    # Poisson: tighten the tail so the n-weighted sum stays within budget
    dist = CoherentDistribution(mean, eps_trunc=eps_trunc)
    dist = CoherentDistribution(
        mean, eps_trunc=eps_trunc / (10.0 * (dist.n_max + 1))
    )
    n = np.arange(dist.n_max + 1)
    terms = dist.probabilities() * click_probability(n, eta)
    if variant == "literal":
        terms = terms * n
    return float(terms.sum())


def _validate_rep_rate(f: float) -> None:
    if not f > 0:
        raise ValueError(f"repetition rate must be positive, got {f!r}")
