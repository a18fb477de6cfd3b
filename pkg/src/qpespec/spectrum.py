"""Eigenphase spectra, circular phase arithmetic and error metrics.

Phases live on the circle and are always stored canonically in the
half-open interval [-pi, pi).  A spectrum is a finite set of distinct
eigenphases with non-negative weights summing to one, i.e. the
distribution of eigenvalues e^{i phi_j} weighted by the overlaps
A_j = |<phi_j|Psi>|^2 of the prepared state with each eigenstate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TWO_PI",
    "wrap_phase",
    "circular_distance",
    "ErrorStats",
    "error_stats",
    "Spectrum",
    "save_spectrum",
    "load_spectrum",
]

TWO_PI = 2.0 * math.pi

#: Phases closer than this are treated as the same eigenvalue.
DEGENERACY_TOL = 1e-12


def wrap_phase(x):
    """Reduce an angle (scalar or array) to the interval [-pi, pi).

    The upper boundary maps down: ``wrap_phase(pi) == -pi``.  Values
    must be finite.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("phases must be finite")
    out = np.mod(arr + np.pi, TWO_PI) - np.pi
    # Guard against floating-point fold-back onto the excluded endpoint.
    out = np.where(out >= np.pi, out - TWO_PI, out)
    if arr.ndim == 0:
        return float(out)
    return out


def circular_distance(a, b):
    """Shortest angular distance between two phases, in [0, pi].

    Accepts scalars or broadcastable arrays.
    """
    d = np.abs(np.asarray(wrap_phase(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))))
    if d.ndim == 0:
        return float(d)
    return d


@dataclass(frozen=True)
class ErrorStats:
    """Aggregate error metrics of a set of phase estimates.

    Attributes
    ----------
    mean_abs : float
        Mean circular distance to the true phase.
    rms : float
        Root-mean-square circular distance.
    holevo_var : float
        Holevo phase variance |<e^{i phi_est}>|^{-2} - 1 of the
        estimate set; ``inf`` when the mean phasor vanishes.
    """

    mean_abs: float
    rms: float
    holevo_var: float


def error_stats(true_phase: float, estimates) -> ErrorStats:
    """Compute circular error statistics of estimates against a true phase.

    Parameters
    ----------
    true_phase : float
        Ground-truth phase.
    estimates : array_like
        One estimate per trial; must be non-empty.
    """
    est = np.asarray(estimates, dtype=float)
    if est.size == 0:
        raise ValueError("estimates must be non-empty")
    d = circular_distance(est, true_phase)
    d = np.atleast_1d(d)
    mean_abs = float(np.mean(d))
    rms = float(np.sqrt(np.mean(d * d)))
    z = np.mean(np.exp(1j * est))
    az = abs(z)
    # A mean phasor at rounding-noise level carries no phase information.
    holevo = math.inf if az < 1e-12 else 1.0 / (az * az) - 1.0
    return ErrorStats(mean_abs=mean_abs, rms=rms, holevo_var=holevo)


@dataclass
class Spectrum:
    """A weighted set of eigenphases.

    Construction canonicalizes the entries: phases are wrapped to
    [-pi, pi), entries whose phases coincide within ``DEGENERACY_TOL``
    (circularly) are merged by summing their weights, and the weights
    are validated to be non-negative and to sum to one within 1e-12.
    Entries are stored sorted by phase.
    """

    phases: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        phases = np.atleast_1d(np.asarray(self.phases, dtype=float))
        weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if phases.shape != weights.shape or phases.ndim != 1:
            raise ValueError("phases and weights must be 1-d arrays of equal length")
        if phases.size == 0:
            raise ValueError("spectrum must contain at least one entry")
        if np.any(weights < 0.0):
            raise ValueError("weights must be non-negative")
        total = float(np.sum(weights))
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1 (got {total!r})")
        phases = np.asarray(wrap_phase(phases))
        phases, weights = _merge_degenerate(phases, weights)
        self.phases = phases
        self.weights = weights

    @classmethod
    def from_pairs(cls, pairs) -> "Spectrum":
        """Build from an iterable of (phase, weight) pairs."""
        pairs = list(pairs)
        return cls(
            phases=np.array([p for p, _ in pairs], dtype=float),
            weights=np.array([w for _, w in pairs], dtype=float),
        )

    @classmethod
    def single(cls, phase: float) -> "Spectrum":
        """A pure eigenstate at the given phase."""
        return cls(phases=np.array([phase]), weights=np.array([1.0]))

    @property
    def n_eig(self) -> int:
        return self.phases.size

    def g(self, k):
        """Exact spectral signal g(k) = sum_j A_j e^{i k phi_j}.

        ``k`` may be a scalar or an array of (possibly negative) integers.
        """
        k = np.asarray(k)
        val = np.sum(self.weights * np.exp(1j * np.multiply.outer(k, self.phases)), axis=-1)
        if k.ndim == 0:
            return complex(val)
        return val


def _merge_degenerate(phases: np.ndarray, weights: np.ndarray):
    """Merge entries with circularly coincident phases; sort by phase."""
    order = np.argsort(phases, kind="stable")
    phases = phases[order]
    weights = weights[order]
    groups = [[0]]
    for i in range(1, phases.size):
        if phases[i] - phases[groups[-1][0]] <= DEGENERACY_TOL:
            groups[-1].append(i)
        else:
            groups.append([i])
    # The circle wraps: the first and last groups may coincide across -pi.
    if len(groups) > 1:
        lo = phases[groups[0][0]]
        hi = phases[groups[-1][0]]
        if (lo + TWO_PI) - hi <= DEGENERACY_TOL:
            groups[0] = groups.pop() + groups[0]
    out_p = np.empty(len(groups))
    out_w = np.empty(len(groups))
    for gi, idx in enumerate(groups):
        w = weights[idx]
        ws = float(np.sum(w))
        # Use the phasor mean so clusters straddling -pi average correctly.
        ph = np.exp(1j * phases[idx])
        mean = np.mean(ph) if ws == 0.0 else np.sum(w * ph) / ws
        out_p[gi] = wrap_phase(float(np.angle(mean)))
        out_w[gi] = ws
    order = np.argsort(out_p, kind="stable")
    return out_p[order], out_w[order]


def save_spectrum(path, spectrum: Spectrum) -> None:
    """Write a spectrum as ``phase,weight`` text lines (17 significant digits)."""
    with open(path, "w", encoding="ascii") as fh:
        for p, w in zip(spectrum.phases, spectrum.weights):
            fh.write(f"{p:.17g},{w:.17g}\n")


def load_spectrum(path) -> Spectrum:
    """Read a spectrum written by :func:`save_spectrum`."""
    phases = []
    weights = []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            p, w = line.split(",")
            phases.append(float(p))
            weights.append(float(w))
    return Spectrum(phases=np.array(phases), weights=np.array(weights))
