"""Lorenz curves, Lorenz dominance and the Gini coefficient."""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass

import numpy as np

COMPARE_TOL = 1e-12


class AllZero(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


class Dominance(enum.Enum):
    X_DOMINATES = "XDominates"
    Y_DOMINATES = "YDominates"
    EQUAL = "Equal"
    INCOMPARABLE = "Incomparable"


@dataclass(frozen=True)
class LorenzCurve:
    """Cumulative share held by the poorest k agents, k = 1..n."""

    points: np.ndarray

    @property
    def n(self) -> int:
        return self.points.size

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "share"])
            for k, s in enumerate(self.points, start=1):
                w.writerow([k, f"{s:.17g}"])


def _validate(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size == 0:
        raise AllZero("empty distribution")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise ValueError("distribution entries must be finite and nonnegative")
    if x.sum() == 0:
        raise AllZero("distribution sums to zero")
    return x


def lorenz_curve(x) -> LorenzCurve:
    x = _validate(x)
    ordered = np.sort(x, kind="stable")
    cum = np.cumsum(ordered)
    pts = cum / cum[-1]
    pts[-1] = 1.0
    pts.flags.writeable = False
    return LorenzCurve(pts)


def lorenz_compare(x, y, tol: float = COMPARE_TOL) -> Dominance:
    """Whether x's Lorenz curve lies weakly above y's everywhere, or the reverse."""
    x = _validate(x)
    y = _validate(y)
    if x.size != y.size:
        raise LengthMismatch(f"distributions have lengths {x.size} and {y.size}")
    diff = lorenz_curve(x).points - lorenz_curve(y).points
    above = bool(np.any(diff > tol))
    below = bool(np.any(diff < -tol))
    if above and below:
        return Dominance.INCOMPARABLE
    if above:
        return Dominance.X_DOMINATES
    if below:
        return Dominance.Y_DOMINATES
    return Dominance.EQUAL


def gini(x) -> float:
    """Trapezoid Gini: 1 - (2/n) sum_k L(k) + 1/n."""
    pts = lorenz_curve(x).points
    n = pts.size
    return float(1.0 - 2.0 * pts.sum() / n + 1.0 / n)
