"""Second- and third-order correlation functions of a pulsed pair source.

All functions are normalized zero-delay correlation values computed from
the geometric per-pulse pair distribution Pr(n) = (1 - x) x**n:

- g2_unheralded / g3_unheralded: one arm alone; the single-mode thermal
  values 2 and 6, independent of x.
- g2_heralded_ideal: the signal arm conditioned on a perfect herald,
  whose pair distribution is Pr(n | n >= 1); equals 2x.
- g2_signal_idler / g3_signal_idler: both arms pooled, so each pulse
  carries N = 2n photons; equal 1/(2x) + 3/2 and 3(1 + x)/x.
- g2_from_counts: the experimental estimator 2 * CC123 * SC1 /
  (CC12 + CC13)**2 applied to measured counts.
- g2_heralded_predicted: the same estimator applied to the detector-model
  rate predictions for a given (x, eta1, eta2, eta3), which accounts for
  multi-pair emission seen through lossy bucket detectors.

Closed forms are the production path; ``method="series"`` evaluates the
defining photon-number sums and ``method="moments"`` (where offered) goes
through raw moments, for cross-checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .detector_model import split_coincidences, validate_efficiency
from .errors import DivergenceError
from .inversion import FailedRow, TableOneRow
from .photon_statistics import (
    EPS_TRUNC_DEFAULT,
    factorial_moment,
    validate_emission_parameter,
    weighted_pair_sum,
)

# Branch efficiencies after the balanced splitter, relative to the full
# signal-arm efficiency recovered by the inversion.  The transmitted
# branch keeps the signal-arm detector; the reflected branch uses a
# detector whose calibrated SDE is 0.56 against the signal arm's 0.68,
# hence the default ratio.  Both are overridable wherever they are used.
DEFAULT_ETA2_SCALE = 1.0
DEFAULT_ETA3_SCALE = 0.56 / 0.68


def g2_from_counts(
    sc1: float,
    cc12: float,
    cc13: float,
    cc123: float,
    with_sigma: bool = False,
    integration_time: float = 1.0,
):
    """Experimental zero-delay g2 estimator 2 * cc123 * sc1 / (cc12 + cc13)**2.

    With ``with_sigma=True`` returns (value, sigma), propagating Poissonian
    errors on the four counts accumulated over ``integration_time`` seconds.
    """
    for name, v in (("sc1", sc1), ("cc12", cc12), ("cc13", cc13), ("cc123", cc123)):
        if v < 0:
            raise ValueError(f"{name} must be non-negative, got {v!r}")
    denom = cc12 + cc13
    if denom == 0:
        raise DivergenceError("cc12 + cc13 = 0: g2 estimator undefined")
    value = 2.0 * cc123 * sc1 / denom**2
    if not with_sigma:
        return value
    if integration_time <= 0:
        raise ValueError("integration_time must be positive")
    # Var(rate) = rate / T for Poisson counts accumulated over T seconds
    partials = (
        (sc1, 2.0 * cc123 / denom**2),
        (cc123, 2.0 * sc1 / denom**2),
        (cc12, -2.0 * value / denom),
        (cc13, -2.0 * value / denom),
    )
    var = sum(d**2 * rate / integration_time for rate, d in partials)
    return value, math.sqrt(var)


def g2_unheralded(
    x: float, method: str = "closed", eps_trunc: float = EPS_TRUNC_DEFAULT
) -> float:
    """Single-arm g2(0); exactly 2 for the geometric distribution."""
    x = validate_emission_parameter(x)
    if method == "closed":
        return 2.0
    if method == "series":
        return _series_ratio(x, order=2, eps_trunc=eps_trunc)
    raise ValueError(f"unknown method {method!r}")


def g3_unheralded(
    x: float, method: str = "closed", eps_trunc: float = EPS_TRUNC_DEFAULT
) -> float:
    """Single-arm g3(0); exactly 6 for the geometric distribution."""
    x = validate_emission_parameter(x)
    if x == 0.0:
        raise DivergenceError("g3 undefined at x = 0 (no photons)")
    if method == "closed":
        return 6.0
    if method == "series":
        return _series_ratio(x, order=3, eps_trunc=eps_trunc)
    raise ValueError(f"unknown method {method!r}")


def _series_ratio(x: float, order: int, eps_trunc: float) -> float:
    if x == 0.0:
        raise DivergenceError("correlation series undefined at x = 0")
    num = factorial_moment(x, order, method="series", eps_trunc=eps_trunc)
    mean = factorial_moment(x, 1, method="series", eps_trunc=eps_trunc)
    return num / mean**order


def g2_heralded_ideal(
    x: float, method: str = "closed", eps_trunc: float = EPS_TRUNC_DEFAULT
) -> float:
    """g2(0) of the signal arm under a perfect herald; equals 2x.

    The heralded pair-number distribution is the source distribution
    conditioned on n >= 1.  At x = 0 the heralded state is a single pair
    with certainty in the limit, so 0 is returned.
    """
    x = validate_emission_parameter(x)
    if method == "closed":
        return 2.0 * x
    if method != "series":
        raise ValueError(f"unknown method {method!r}")
    if x == 0.0:
        return 0.0
    # conditional moments: E[w(n) | n >= 1] = sum w(n) Pr(n) / x
    num = weighted_pair_sum(
        x, lambda n: (n * (n - 1.0)), eps_trunc, n_start=2
    ) / x
    mean = weighted_pair_sum(
        x, lambda n: n.astype(float), eps_trunc, n_start=1
    ) / x
    return num / mean**2


def g2_signal_idler(
    x: float, method: str = "closed", eps_trunc: float = EPS_TRUNC_DEFAULT
) -> float:
    """g2(0) of the pooled signal+idler field (2n photons per pulse).

    Equals 1/(2x) + 3/2; diverges as x -> 0.
    """
    x = validate_emission_parameter(x)
    if x == 0.0:
        raise DivergenceError("g2 of the pooled field diverges at x = 0")
    if method == "closed":
        return 1.0 / (2.0 * x) + 1.5
    if method == "series":
        num = weighted_pair_sum(
            x, lambda n: 2.0 * n * (2.0 * n - 1.0), eps_trunc, n_start=1
        )
        mean = weighted_pair_sum(
            x, lambda n: 2.0 * n.astype(float), eps_trunc, n_start=1
        )
        return num / mean**2
    if method == "moments":
        mu = x / (1.0 - x)
        m1, m2 = 2.0 * mu, 4.0 * (2.0 * mu**2 + mu)
        return (m2 - m1) / m1**2
    raise ValueError(f"unknown method {method!r}")


def g3_signal_idler(
    x: float, method: str = "closed", eps_trunc: float = EPS_TRUNC_DEFAULT
) -> float:
    """g3(0) of the pooled signal+idler field; equals 3 (1 + x) / x."""
    x = validate_emission_parameter(x)
    if x == 0.0:
        raise DivergenceError("g3 of the pooled field diverges at x = 0")
    if method == "closed":
        return 3.0 * (1.0 + x) / x
    if method == "series":
        num = weighted_pair_sum(
            x,
            lambda n: 2.0 * n * (2.0 * n - 1.0) * (2.0 * n - 2.0),
            eps_trunc,
            n_start=1,
        )
        mean = weighted_pair_sum(
            x, lambda n: 2.0 * n.astype(float), eps_trunc, n_start=1
        )
        return num / mean**3
    if method == "moments":
        mu = x / (1.0 - x)
        m1 = 2.0 * mu
        m2 = 4.0 * (2.0 * mu**2 + mu)
        m3 = 8.0 * (6.0 * mu**3 + 6.0 * mu**2 + mu)
        return (m3 - 3.0 * m2 + 2.0 * m1) / m1**3
    raise ValueError(f"unknown method {method!r}")


def g2_heralded_predicted(
    x: float,
    eta1: float,
    eta2: float,
    eta3: float,
    f: float = 1.0,
    method: str = "series",
    eps_trunc: float = EPS_TRUNC_DEFAULT,
) -> float:
    """g2 the splitter measurement would report, from the rate model.

    Applies the counting estimator to the predicted rates for emission
    parameter x seen by the heralding detector eta1 and the two
    post-splitter branches eta2, eta3.  The repetition rate cancels in
    the estimator; f is accepted only for interface symmetry.

    At x = 0 the limit 0 is returned (one pair at most, no accidentals).
    """
    x = validate_emission_parameter(x)
    validate_efficiency(eta1, "eta1")
    validate_efficiency(eta2, "eta2")
    validate_efficiency(eta3, "eta3")
    if x == 0.0:
        return 0.0
    rates = split_coincidences(
        f, x, eta1, eta2, eta3, method=method, eps_trunc=eps_trunc
    )
    return g2_from_counts(rates.sc1h, rates.cc12, rates.cc13, rates.cc123)


@dataclass(frozen=True)
class CorrelationReport:
    """One power point's correlation values.

    g2_measured comes from measured split counts when the sweep row
    carried them (counting arithmetic on data); every other field is
    analytic, evaluated at the recovered source/detector parameters.
    Fields are None where the quantity diverges or cannot be formed.
    """

    power_mw: float
    g2_measured: float | None
    g2_predicted: float | None
    g2_heralded: float
    g2_unheralded: float
    g2_signal_idler: float | None
    g3_signal_idler: float | None
    g3_unheralded: float | None


def report_for_row(
    row: TableOneRow,
    eta2_scale: float = DEFAULT_ETA2_SCALE,
    eta3_scale: float = DEFAULT_ETA3_SCALE,
    eps_trunc: float = EPS_TRUNC_DEFAULT,
) -> CorrelationReport:
    """Correlation values for one inverted sweep row."""
    x = row.x
    eta2 = min(row.eta2 * eta2_scale, 1.0)
    eta3 = min(row.eta2 * eta3_scale, 1.0)
    g2_meas = None
    if row.cc12 is not None:
        try:
            g2_meas = g2_from_counts(row.sc1, row.cc12, row.cc13, row.cc123)
        except DivergenceError:
            g2_meas = None

    def guarded(fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except DivergenceError:
            return None

    return CorrelationReport(
        power_mw=row.power_mw,
        g2_measured=g2_meas,
        g2_predicted=guarded(
            g2_heralded_predicted, x, row.eta1, eta2, eta3, eps_trunc=eps_trunc
        ),
        g2_heralded=g2_heralded_ideal(x),
        g2_unheralded=g2_unheralded(x),
        g2_signal_idler=guarded(g2_signal_idler, x),
        g3_signal_idler=guarded(g3_signal_idler, x),
        g3_unheralded=guarded(g3_unheralded, x),
    )


def build_table_two(
    rows: list[TableOneRow | FailedRow],
    eta2_scale: float = DEFAULT_ETA2_SCALE,
    eta3_scale: float = DEFAULT_ETA3_SCALE,
    eps_trunc: float = EPS_TRUNC_DEFAULT,
) -> list[CorrelationReport | FailedRow]:
    """Correlation reports for every successfully inverted row.

    FailedRow entries pass through unchanged so callers can keep the
    row-for-row correspondence with the input sweep.
    """
    out: list[CorrelationReport | FailedRow] = []
    for row in rows:
        if isinstance(row, FailedRow):
            out.append(row)
            continue
        out.append(
            report_for_row(
                row,
                eta2_scale=eta2_scale,
                eta3_scale=eta3_scale,
                eps_trunc=eps_trunc,
            )
        )
    return out


def pooled_moment_check(x: float) -> tuple[float, float]:
    """Raw-moment identity values (g2, g3) of the pooled field.

    Convenience wrapper used by cross-checks; both entries must agree
    with the closed forms.
    """
    return (
        g2_signal_idler(x, method="moments"),
        g3_signal_idler(x, method="moments"),
    )
