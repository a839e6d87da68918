"""Flip-interval transition estimates and the 1/L_eff extrapolation."""
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FlipIntervalEstimate:
    x_lo: float
    x_hi: float

    @property
    def center(self) -> float:
        return 0.5 * (self.x_lo + self.x_hi)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.x_hi - self.x_lo)


@dataclass(frozen=True)
class ScalingFit:
    intercept: float        # extrapolated critical point x_c(inf)
    slope: float
    intercept_stderr: float
    points: tuple           # (1/L_eff, center, uncertainty) per lattice


def flip_interval(xs, labels) -> FlipIntervalEstimate:
    """Transition interval between the uniform prefix and the opposite
    uniform suffix of the label sequence over strictly sorted x."""
    xs = np.asarray(xs, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if xs.ndim != 1 or xs.shape != labels.shape or xs.size < 2:
        raise ValueError("need matching 1-d arrays with >= 2 entries")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("x values must be strictly increasing")
    first = labels[0]
    if np.all(labels == first):
        raise ValueError("no transition: all labels identical")
    if labels[-1] == first:
        raise ValueError("no transition: labels at both extremes are equal")
    j_min = 0
    while labels[j_min + 1] == first:
        j_min += 1
    j_max = labels.size - 1
    while labels[j_max - 1] == labels[-1]:
        j_max -= 1
    return FlipIntervalEstimate(x_lo=float(xs[j_min]), x_hi=float(xs[j_max]))


def fit_finite_size(points, weighted: bool = False) -> ScalingFit:
    """Least squares of the estimate centers against 1/sqrt(plaquettes).

    points: iterable of (plaquette_count, FlipIntervalEstimate | float).
    With weighted=True each point is weighted by 1/half_width^2.
    """
    ps, ys, us = [], [], []
    for p, est in points:
        ps.append(float(p))
        if isinstance(est, FlipIntervalEstimate):
            ys.append(est.center)
            us.append(est.half_width)
        else:
            ys.append(float(est))
            us.append(0.0)
    if len(ps) < 2 or len(set(ps)) < 2:
        raise ValueError("need >= 2 points with distinct plaquette counts")
    u = 1.0 / np.sqrt(np.asarray(ps))
    y = np.asarray(ys)
    A = np.column_stack([np.ones_like(u), u])
    if weighted:
        if any(h <= 0 for h in us):
            raise ValueError("weighted fit requires positive uncertainties")
        w = 1.0 / np.asarray(us) ** 2
        Aw = A * np.sqrt(w)[:, None]
        yw = y * np.sqrt(w)
    else:
        Aw, yw = A, y
    coef, *_ = np.linalg.lstsq(Aw, yw, rcond=None)
    resid = yw - Aw @ coef
    n = len(ys)
    if n > 2:
        s2 = float(resid @ resid) / (n - 2)
        cov = s2 * np.linalg.inv(Aw.T @ Aw)
        stderr = math.sqrt(max(cov[0, 0], 0.0))
    else:
        stderr = 0.0
    return ScalingFit(
        intercept=float(coef[0]),
        slope=float(coef[1]),
        intercept_stderr=stderr,
        points=tuple(zip(u.tolist(), ys, us)),
    )


def aggregate_repetitions(estimates):
    """(mean, sample stddev) of the interval centers; stddev 0 for n = 1."""
    if not estimates:
        raise ValueError("no estimates to aggregate")
    centers = np.asarray([e.center for e in estimates])
    mean = float(centers.mean())
    std = float(centers.std(ddof=1)) if centers.size > 1 else 0.0
    return mean, std
