"""Transient-time metrology: settling times, reach histograms, envelopes.

Settling is defined on sampled series with a for-all-later-samples rule:
the settling time is the earliest sample after which the deviation never
leaves the band again up to the end of the horizon.  A series that ends
outside the band has no settling time; the not-reached sentinel is NaN
everywhere in this package (it survives CSV round-trips as 'nan').
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pendulum import PendulumParams, beta_prime, kappa, sigma

NOT_REACHED = math.nan


def settling_time(times: np.ndarray, deviations: np.ndarray, tol: float) -> float:
    """Earliest sample t with deviation <= tol from t through the end.

    Args:
        times: sample instants, nondecreasing
        deviations: nonnegative deviation samples, same length
        tol: band radius

    Returns:
        the settling sample time, or NaN when the final sample is outside
        the band (the horizon cannot certify settling then).
    """
    times = np.asarray(times, dtype=float)
    dev = np.asarray(deviations, dtype=float)
    if times.size == 0 or dev.size != times.size:
        raise ValueError("requires equal, nonzero numbers of times and deviations")
    # Running max from the right; first index where it dips under tol.
    tail_max = np.maximum.accumulate(dev[::-1])[::-1]
    inside = tail_max <= tol
    if not inside[-1]:
        return NOT_REACHED
    return float(times[int(np.argmax(inside))])


def settling_candidate_update(inside_now: np.ndarray, t: float,
                              cand_t: np.ndarray, cand_on: np.ndarray):
    """One online update of the batch settling tracker.

    Equivalent to settling_time applied to the full series: the candidate
    entry time is set when the band is entered and wiped when it is left,
    so whatever candidate survives the final sample is the settling time.
    Mutates cand_t in place and returns the new cand_on mask.
    """
    entered = inside_now & ~cand_on
    cand_t[entered] = t
    return inside_now & (cand_on | entered)


def entropy_of_masses(counts: np.ndarray) -> float:
    """Discrete Shannon entropy -sum q ln q of a nonnegative mass vector.

    Masses are normalized to the total count, so this is the entropy of
    the bin-mass distribution itself (uniform over N bins gives ln N).
    Returns NaN for an all-zero vector.
    """
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total <= 0.0:
        return math.nan
    q = counts[counts > 0.0] / total
    return float(-(q * np.log(q)).sum())


@dataclass
class ReachDistribution:
    """Binned settling-time distributions for the two bands.

    cdf arrays are fractions of all records (reached or not) with settling
    time at or below each right bin edge, so cdf[-1] equals the reached
    fraction.  pdf arrays are first differences of the cdf over the bin
    width.  Entropies are taken over the reached records only.
    """

    bin_edges: np.ndarray
    cdf_x: np.ndarray
    cdf_h: np.ndarray
    pdf_x: np.ndarray
    pdf_h: np.ndarray
    entropy_x: float
    entropy_h: float
    n_records: int
    unreached_x: int
    unreached_h: int

    @property
    def right_edges(self) -> np.ndarray:
        return self.bin_edges[1:]

    def time_at_cdf(self, level: float, which: str) -> float:
        """Earliest right bin edge whose cdf reaches level, NaN if never."""
        cdf = self.cdf_x if which == "x" else self.cdf_h
        hits = np.nonzero(cdf >= level)[0]
        if hits.size == 0:
            return NOT_REACHED
        return float(self.right_edges[hits[0]])


def _bin_masses(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Counts per right-inclusive bin (lo, hi], first bin closed at 0."""
    finite = values[np.isfinite(values)]
    idx = np.searchsorted(edges, finite, side="left") - 1
    idx = np.clip(idx, 0, len(edges) - 2)
    return np.bincount(idx, minlength=len(edges) - 1).astype(float)


def build_distribution(settle_x: np.ndarray, settle_h: np.ndarray,
                       t_end: float, n_bins: int = 20000) -> ReachDistribution:
    """Histogram both settling-time collections on a shared uniform grid.

    NaN entries count as unreached and are excluded from the histogram
    and from the entropies, but still sit in the cdf denominator.
    """
    settle_x = np.asarray(settle_x, dtype=float)
    settle_h = np.asarray(settle_h, dtype=float)
    if settle_x.size == 0 or settle_x.shape != settle_h.shape:
        raise ValueError("requires equal, nonzero numbers of x and H records")
    if n_bins < 1 or not (t_end > 0.0):
        raise ValueError("requires n_bins >= 1 and t_end > 0")
    width = t_end / n_bins
    edges = np.arange(n_bins + 1) * width
    n = settle_x.size
    mass_x = _bin_masses(settle_x, edges)
    mass_h = _bin_masses(settle_h, edges)
    return ReachDistribution(
        bin_edges=edges,
        cdf_x=np.cumsum(mass_x) / n,
        cdf_h=np.cumsum(mass_h) / n,
        pdf_x=mass_x / n / width,
        pdf_h=mass_h / n / width,
        entropy_x=entropy_of_masses(mass_x),
        entropy_h=entropy_of_masses(mass_h),
        n_records=n,
        unreached_x=int(np.sum(~np.isfinite(settle_x))),
        unreached_h=int(np.sum(~np.isfinite(settle_h))),
    )


def t_lambda(lam: float, params: PendulumParams) -> float:
    """Time for the local envelope to decay from sigma(delta_cap) to lam.

    Solves sigma(delta_cap) exp(-kappa t / 2) = lam, so
    t = (2/kappa) ln(sigma(delta_cap)/lam).  Requires 0 < lam < sigma(delta_cap).
    """
    cap = float(sigma(params.delta_cap))
    if not (0.0 < lam < cap):
        raise ValueError(
            f"requires 0 < lam < sigma(delta_cap) = {cap:g}, got lam={lam:g}")
    return 2.0 / kappa(params) * math.log(cap / lam)


def local_envelope_violation(times: np.ndarray, psi: np.ndarray,
                             t_entry: float, params: PendulumParams) -> float:
    """Worst excess of |psi| over the local decay envelope after t_entry.

    The envelope is beta_prime(delta_cap, t - t_entry) =
    sigma(delta_cap) exp(-kappa (t - t_entry) / 2).  Nonpositive return
    means the envelope held at every sample from t_entry on.
    """
    times = np.asarray(times, dtype=float)
    psi = np.asarray(psi, dtype=float)
    keep = times >= t_entry
    if not keep.any():
        raise ValueError("requires at least one sample at or after t_entry")
    env = beta_prime(params.delta_cap, times[keep] - t_entry, kappa(params))
    return float(np.max(psi[keep] - env))
