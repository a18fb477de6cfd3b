"""Reconstruction of the spectral signal g(k) from aggregated counts.

The spectral signal of a spectrum {(phi_j, A_j)} is

    g(k) = sum_j A_j e^{i k phi_j},         g(-k) = conj(g(k)).

Single-round data determines it directly: with final rotations beta = 0
and beta = pi/2 at each k,

    g(k) = P_{k,0}(0) - P_{k,0}(1) - i P_{k,pi/2}(0) + i P_{k,pi/2}(1).

Multi-round data from the K-round Hamming design determines g(k) for
k <= K/2 through combinatorial coefficients chi_k(hw0, hw1):

    g(k) = sum_{hw0, hw1} chi_k(hw0, hw1) P(hw0, hw1).

``chi_closed_form`` evaluates the coefficients from a hypergeometric
parity sum; ``chi_oracle`` computes the same quantity by enumerating
outcome bit-strings and exists as an independent cross-check.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .simulator import AggregatedCounts

__all__ = [
    "SignalEstimate",
    "exact_signal",
    "g_from_single_round",
    "g_from_multi_round",
    "extend_negative",
    "chi_oracle",
    "chi_closed_form",
    "chi_table",
    "rho_parity",
]


@dataclass
class SignalEstimate:
    """Estimated spectral signal on k = 0..K.

    Attributes
    ----------
    g : complex ndarray
        Signal values; ``g[0]`` is pinned to 1.
    sigma : float ndarray
        Per-k standard deviation of the estimate (a single scalar
        covering the real and imaginary parts jointly); zero for exact
        constructions.
    """

    g: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=complex)
        self.sigma = np.asarray(self.sigma, dtype=float)
        if self.g.shape != self.sigma.shape or self.g.ndim != 1 or self.g.size == 0:
            raise ValueError("g and sigma must be 1-d arrays of equal nonzero length")

    @property
    def K(self) -> int:
        return self.g.size - 1


def exact_signal(spectrum, K: int) -> SignalEstimate:
    """The exact signal of a known spectrum on k = 0..K (sigma = 0)."""
    if K < 1:
        raise ValueError("K must be >= 1")
    ks = np.arange(K + 1)
    return SignalEstimate(g=spectrum.g(ks), sigma=np.zeros(K + 1))


def g_from_single_round(counts: AggregatedCounts, K: int | None = None) -> SignalEstimate:
    """Reconstruct g(k) from single-round tallies.

    Requires beta = 0 and beta = pi/2 cells at every k = 1..K; K
    defaults to the largest k present.  ``g[0]`` is pinned to exactly 1
    with sigma 0; elsewhere sigma is the binomial standard deviation
    propagated from the two observed frequencies.
    """
    if counts.mode != "single_round":
        raise ValueError("expected single_round counts")
    cells = {}
    for (k, beta, m), n in counts.tallies.items():
        cells.setdefault(k, {}).setdefault(beta, {})[m] = n
    if K is None:
        if not cells:
            raise ValueError("no tallies present")
        K = max(cells)
    g = np.zeros(K + 1, dtype=complex)
    sigma = np.zeros(K + 1)
    g[0] = 1.0
    for k in range(1, K + 1):
        betas = cells.get(k, {})
        b_re = _match_beta(betas, 0.0)
        b_im = _match_beta(betas, math.pi / 2.0)
        if b_re is None or b_im is None:
            raise ValueError(f"missing beta=0 or beta=pi/2 tallies at k={k}")
        p_re, n_re = _frequency(betas[b_re], counts.shots[(k, b_re)])
        p_im, n_im = _frequency(betas[b_im], counts.shots[(k, b_im)])
        g[k] = (2.0 * p_re - 1.0) - 1j * (2.0 * p_im - 1.0)
        var = 4.0 * p_re * (1.0 - p_re) / n_re + 4.0 * p_im * (1.0 - p_im) / n_im
        sigma[k] = math.sqrt(var)
    return SignalEstimate(g=g, sigma=sigma)


def _match_beta(betas: dict, target: float, tol: float = 1e-9):
    for b in betas:
        if abs(b - target) <= tol:
            return b
    return None


def _frequency(tally: dict, shots: int):
    if shots <= 0:
        raise ValueError("cell has no shots")
    return tally.get(0, 0) / shots, shots


def g_from_multi_round(counts: AggregatedCounts, cache_dir=None) -> SignalEstimate:
    """Reconstruct g(k), k = 0..K/2, from Hamming-design tallies.

    Applies the chi coefficients to the empirical Hamming-weight pair
    frequencies.  Sigma propagates the diagonal multinomial variance of
    the cell frequencies through |chi_k|^2 (cell covariances are
    neglected).
    """
    if counts.mode != "multi_round":
        raise ValueError("expected multi_round counts")
    if counts.K is None or counts.total_shots <= 0:
        raise ValueError("counts lack a design size or shots")
    K = counts.K
    half = K // 2
    N = counts.total_shots
    freq = np.zeros((half + 1, half + 1))
    for (hw0, hw1), n in counts.tallies.items():
        freq[hw0, hw1] = n / N
    chi = chi_table(K, cache_dir=cache_dir)
    g = np.tensordot(chi, freq, axes=([1, 2], [0, 1]))
    var = np.tensordot(np.abs(chi) ** 2, freq * (1.0 - freq), axes=([1, 2], [0, 1])) / N
    return SignalEstimate(g=g, sigma=np.sqrt(np.maximum(var, 0.0)))


def extend_negative(signal: SignalEstimate):
    """Extend a signal to k = -K..K using g(-k) = conj(g(k)).

    Returns ``(g_ext, sigma_ext)`` arrays of length 2K+1; index i holds
    k = i - K.  Restricting back to k >= 0 recovers the input exactly.
    """
    g = signal.g
    g_ext = np.concatenate([np.conj(g[:0:-1]), g])
    sigma_ext = np.concatenate([signal.sigma[:0:-1], signal.sigma])
    return g_ext, sigma_ext


def chi_oracle(k: int, hw0: int, hw1: int, K: int) -> complex:
    """Brute-force chi coefficient via bit-string enumeration.

    Averages prod_{i=1}^{k} [(-1)^{m_i} - i (-1)^{n_i}] over all
    bit-strings m, n of length K/2 with Hamming weights hw0, hw1.
    Intended as an independent oracle; use :func:`chi_closed_form` for
    real work.
    """
    half = K // 2
    if K < 2 or K % 2:
        raise ValueError("K must be a positive even integer")
    if not (0 <= k <= half):
        raise ValueError("k must lie in [0, K/2]")
    if not (0 <= hw0 <= half and 0 <= hw1 <= half):
        raise ValueError("Hamming weights must lie in [0, K/2]")
    if k == 0:
        return complex(1.0)
    m_strings = _weighted_strings(half, hw0)
    n_strings = _weighted_strings(half, hw1)
    total = 0.0 + 0.0j
    for m in m_strings:
        sm = [1.0 if not b else -1.0 for b in m[:k]]
        for n in n_strings:
            prod = 1.0 + 0.0j
            for i in range(k):
                prod *= sm[i] - 1j * (1.0 if not n[i] else -1.0)
            total += prod
    return total / (len(m_strings) * len(n_strings))


def _weighted_strings(length: int, weight: int):
    """All bit-strings of the given length and Hamming weight."""
    out = []
    for ones in combinations(range(length), weight):
        bits = [0] * length
        for i in ones:
            bits[i] = 1
        out.append(tuple(bits))
    return out


def rho_parity(l: int, w: int, half: int) -> float:
    """Expected parity product over l fixed positions of a weight-w string.

    Equals E[prod_{i=1}^{l} (-1)^{b_i}] for a uniformly random bit-string
    b of length ``half`` and Hamming weight w:

        rho(l, w) = 2 * sum_p C(w, 2p) C(half - w, l - 2p) / C(half, l) - 1.
    """
    if l == 0:
        return 1.0
    denom = math.comb(half, l)
    if denom == 0:
        raise ValueError("l exceeds string length")
    even = sum(math.comb(w, 2 * p) * math.comb(half - w, l - 2 * p)
               for p in range(l // 2 + 1))
    return 2.0 * even / denom - 1.0


def chi_closed_form(k: int, hw0: int, hw1: int, K: int) -> complex:
    """Closed-form chi coefficient.

        chi_k(hw0, hw1) = sum_{l=0}^{k} C(k, l) (-i)^{k-l}
                          rho(l, hw0) rho(k-l, hw1)

    with rho the hypergeometric parity expectation of
    :func:`rho_parity`.  Validated against :func:`chi_oracle`.
    """
    half = K // 2
    if K < 2 or K % 2:
        raise ValueError("K must be a positive even integer")
    if not (0 <= k <= half):
        raise ValueError("k must lie in [0, K/2]")
    total = 0.0 + 0.0j
    for l in range(k + 1):
        total += (
            math.comb(k, l)
            * (-1j) ** (k - l)
            * rho_parity(l, hw0, half)
            * rho_parity(k - l, hw1, half)
        )
    return total


def chi_table(K: int, cache_dir=None) -> np.ndarray:
    """All chi coefficients for a design size K.

    Returns a complex array of shape (K/2+1, K/2+1, K/2+1) indexed
    [k, hw0, hw1].  If ``cache_dir`` is given the table is stored there
    as ``chi_K{K}.npy`` and reloaded on subsequent calls.
    """
    if K < 2 or K % 2:
        raise ValueError("K must be a positive even integer")
    path = None
    if cache_dir is not None:
        path = os.path.join(cache_dir, f"chi_K{K}.npy")
        if os.path.exists(path):
            return np.load(path)
    half = K // 2
    # rho[l, w]
    rho = np.empty((half + 1, half + 1))
    for l in range(half + 1):
        for w in range(half + 1):
            rho[l, w] = rho_parity(l, w, half)
    ks = np.arange(half + 1)
    chi = np.zeros((half + 1, half + 1, half + 1), dtype=complex)
    for k in ks:
        coef = np.array([math.comb(k, l) * (-1j) ** (k - l) for l in range(k + 1)])
        # sum_l coef[l] * rho[l, hw0] * rho[k-l, hw1]
        chi[k] = np.einsum("l,lm,ln->mn", coef, rho[: k + 1], rho[k::-1])
    if path is not None:
        os.makedirs(cache_dir, exist_ok=True)
        np.save(path, chi)
    return chi
