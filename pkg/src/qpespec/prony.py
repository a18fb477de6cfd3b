"""Time-series eigenphase estimation from the spectral signal.

The signal g(k) = sum_j A_j e^{i k phi_j} satisfies a shift relation:
collecting windows of the signal into a Hankel matrix pair

    G0[i, j] = g(i + j + offset),    G1[i, j] = g(i + j + 1 + offset),

there is an l x l matrix T with T G0 = G1 whose eigenvalues are the
e^{i phi_j} (with zero eigenvalues padding the rest).  The pipeline is:
build the pair, solve the (optionally row-weighted) least-squares
problem min ||T G0 - G1||, take eigenvalue angles as phases, then
recover amplitudes from a linear fit of the signal.

Two windows are supported.  'symmetric' uses k = -K..K via conjugate
extension (offset -K); 'positive_only' uses k = 0..K (offset 0).  The
positive-only window matters under depolarizing noise: the damped
signal g(k) e^{-k/K_err} (k >= 0) is a sum of decaying exponentials
A_j (e^{-1/K_err} e^{i phi_j})^k, so the shift eigenvalues keep the
undamaged phases and acquire moduli e^{-1/K_err}, while the symmetric
window sees the non-exponential kink |k| and is biased.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .extraction import SignalEstimate, extend_negative
from .spectrum import circular_distance, wrap_phase

__all__ = [
    "HankelPair",
    "PronyEstimate",
    "build_hankel",
    "solve_shift",
    "eigenphases",
    "recover_amplitudes",
    "estimate",
    "select_target",
    "predicted_single_freq_variance",
]

#: Relative singular-value cutoff used by every least-squares solve.
RANK_RCOND = 1e-10


@dataclass
class HankelPair:
    """Shifted Hankel matrix pair built from a signal window.

    ``sigma1`` carries the per-entry standard deviation of ``G1`` for
    the weighted solve (None for exact signals).
    """

    G0: np.ndarray
    G1: np.ndarray
    sigma1: np.ndarray | None
    mode: str
    l: int

    def __post_init__(self):
        if self.G0.shape != self.G1.shape:
            raise ValueError("G0 and G1 must have equal shape")


def build_hankel(signal: SignalEstimate, l: int, mode: str = "symmetric") -> HankelPair:
    """Build the Hankel pair of pencil size l from a signal.

    symmetric mode spans k = -K..K (2K+1 values, l <= K columns remain
    2K+1-l >= K+1); positive_only spans k = 0..K (K+1 values, columns
    K+1-l >= 1).
    """
    K = signal.K
    if mode == "symmetric":
        if not 1 <= l <= K:
            raise ValueError(f"need 1 <= l <= K={K} in symmetric mode")
        g_ext, sigma_ext = extend_negative(signal)
        span = 2 * K + 1
    elif mode == "positive_only":
        if not 1 <= l <= K:
            raise ValueError(f"need 1 <= l <= K={K} in positive_only mode")
        g_ext, sigma_ext = signal.g, signal.sigma
        span = K + 1
    else:
        raise ValueError(f"unknown mode {mode!r}")
    ncols = span - l
    idx = np.arange(l)[:, None] + np.arange(ncols)[None, :]
    G0 = g_ext[idx]
    G1 = g_ext[idx + 1]
    sigma1 = sigma_ext[idx + 1]
    return HankelPair(G0=G0, G1=G1, sigma1=sigma1, mode=mode, l=l)


def solve_shift(pair: HankelPair, weighted: bool = False) -> np.ndarray:
    """Least-squares shift matrix T minimizing ||T G0 - G1|| row-wise.

    Uses an SVD-based minimum-norm solve; singular values below
    ``RANK_RCOND`` times the largest are treated as zero, so spurious
    directions land in the null space (zero eigenvalues).  With
    ``weighted=True`` each row i is solved under column weights
    1/sigma(G1[i, j]), flooring zero sigmas at the smallest positive
    one in the row.
    """
    G0, G1 = pair.G0, pair.G1
    if not np.any(G0):
        raise ValueError("degenerate all-zero signal window")
    if not weighted:
        sol, _, _, _ = scipy.linalg.lstsq(G0.T, G1.T, cond=RANK_RCOND,
                                          lapack_driver="gelsd")
        return sol.T
    if pair.sigma1 is None:
        raise ValueError("weighted solve requires sigma estimates")
    rows = []
    for i in range(pair.l):
        w = _weights_from_sigma(pair.sigma1[i])
        sol, _, _, _ = scipy.linalg.lstsq(
            (G0 * w).T, G1[i] * w, cond=RANK_RCOND, lapack_driver="gelsd"
        )
        rows.append(sol)
    return np.array(rows)


def _weights_from_sigma(sigma: np.ndarray) -> np.ndarray:
    positive = sigma[sigma > 0.0]
    if positive.size == 0:
        return np.ones_like(sigma)
    return 1.0 / np.maximum(sigma, positive.min())


def eigenphases(shift: np.ndarray):
    """Eigenvalue angles and moduli of the shift matrix.

    Returns ``(phases, moduli)`` with phases wrapped to [-pi, pi).
    """
    try:
        ev = np.linalg.eigvals(shift)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - numeric edge
        raise ValueError(f"shift-matrix eigendecomposition failed: {exc}") from exc
    return np.asarray(wrap_phase(np.angle(ev))), np.abs(ev)


def recover_amplitudes(phases, signal: SignalEstimate, n_rows: int | None = None,
                       moduli=None) -> np.ndarray:
    """Real least-squares amplitudes fitting sum_j A_j e^{i k phi_j} = g(k).

    Fits rows k = 0..n_rows (default: all of the signal) with the real
    and imaginary parts stacked so the solution is real; rank-deficient
    fits (duplicate or spurious phases) fall back to the minimum-norm
    solution.  When ``moduli`` is given the basis decays accordingly,
    B[k, j] = (moduli_j e^{i phi_j})^k, which matches a
    depolarization-damped signal so the undamped amplitudes come out of
    the fit directly.
    """
    phases = np.asarray(phases, dtype=float)
    if phases.size == 0:
        raise ValueError("need at least one phase")
    if n_rows is None:
        n_rows = signal.K
    ks = np.arange(n_rows + 1)
    nodes = np.exp(1j * phases)
    if moduli is not None:
        nodes = nodes * np.asarray(moduli, dtype=float)
    B = nodes[None, :] ** ks[:, None]
    target = signal.g[: n_rows + 1]
    M = np.vstack([B.real, B.imag])
    y = np.concatenate([target.real, target.imag])
    sol, _, _, _ = scipy.linalg.lstsq(M, y, cond=RANK_RCOND, lapack_driver="gelsd")
    return sol


@dataclass
class PronyEstimate:
    """Recovered spectrum: phases sorted by descending raw amplitude.

    ``moduli`` are the shift-eigenvalue magnitudes (near 1 for a clean
    signal; near e^{-1/K_err} in compensated positive_only mode, where
    the amplitude-weighted mean modulus is also reported as ``decay``).
    ``amplitudes`` is the raw real least-squares solution and may have
    small negative entries; ``amplitudes_clipped`` clips at zero and
    renormalizes to sum 1.
    """

    phases: np.ndarray
    amplitudes: np.ndarray
    moduli: np.ndarray
    mode: str
    l: int
    decay: float | None = None

    @property
    def amplitudes_clipped(self) -> np.ndarray:
        clipped = np.clip(self.amplitudes, 0.0, None)
        total = clipped.sum()
        return clipped / total if total > 0 else clipped


def estimate(signal: SignalEstimate, l: int | None = None, mode: str = "symmetric",
             weighted: bool = False) -> PronyEstimate:
    """Full pipeline: Hankel pair, shift solve, eigenphases, amplitudes."""
    if l is None:
        l = signal.K if mode == "symmetric" else max(1, (signal.K + 1) // 2)
    pair = build_hankel(signal, l, mode)
    shift = solve_shift(pair, weighted=weighted)
    phases, moduli = eigenphases(shift)
    # In the compensated window the signal itself decays, so fit
    # amplitudes against the decaying eigenvalue basis.
    fit_moduli = moduli if mode == "positive_only" else None
    amps = recover_amplitudes(phases, signal, n_rows=min(l, signal.K),
                              moduli=fit_moduli)
    order = np.argsort(-amps, kind="stable")
    phases, amps, moduli = phases[order], amps[order], moduli[order]
    decay = None
    if mode == "positive_only":
        weights = np.clip(amps, 0.0, None)
        total = weights.sum()
        decay = float(np.average(moduli, weights=weights)) if total > 0 else float(np.mean(moduli))
    return PronyEstimate(phases=phases, amplitudes=amps, moduli=moduli,
                         mode=mode, l=l, decay=decay)


def select_target(est: PronyEstimate, policy: str = "max_amplitude",
                  reference: float | None = None) -> float:
    """Pick one phase from an estimate.

    'max_amplitude' returns the largest-amplitude phase; 'nearest'
    returns the phase circularly closest to ``reference``.  Ties break
    toward the smaller phase value.
    """
    if est.phases.size == 0:
        raise ValueError("estimate contains no phases")
    if policy == "max_amplitude":
        best = np.lexsort((est.phases, -est.amplitudes))[0]
        return float(est.phases[best])
    if policy == "nearest":
        if reference is None:
            raise ValueError("nearest policy requires a reference phase")
        d = circular_distance(est.phases, reference)
        best = np.lexsort((est.phases, np.atleast_1d(d)))[0]
        return float(est.phases[best])
    raise ValueError(f"unknown policy {policy!r}")


def predicted_single_freq_variance(K: int, N: float, phase: float = 0.0,
                                   weighted: bool = False,
                                   var_g0: float | None = None,
                                   var_g1: float | None = None) -> float:
    """Predicted variance of a single-frequency l=1 estimate.

    Only the window endpoints k = +-K carry sensitivity for the
    unweighted symmetric solve, giving

        Var(phi) = [sin^2(K phi) Var g0_K + cos^2(K phi) Var g1_K] / K^2

    with Var g = 1/N by default (g estimated from N shots).  The
    weighted solve spreads sensitivity over the window, trading a
    factor K: Var(phi) ~ K * (same expression) -> 1/(K N).
    """
    if K < 1 or N <= 0:
        raise ValueError("K must be >= 1 and N positive")
    if var_g0 is None:
        var_g0 = 1.0 / N
    if var_g1 is None:
        var_g1 = 1.0 / N
    s, c = math.sin(K * phase), math.cos(K * phase)
    base = (s * s * var_g0 + c * c * var_g1) / (K * K)
    return base * K if weighted else base
