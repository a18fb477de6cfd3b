"""Measurement-schedule generators.

Three designs are provided:

* a single-round cycle over orders k = 1..K, splitting the experiment
  budget evenly between the two reference phases beta = 0 and
  beta = pi/2 (feeds the spectral-signal estimator),
* the K-round order-1 design whose outcomes reduce to a pair of
  Hamming weights (feeds the weight-pair channel of the same
  estimator), and
* the adaptive heuristic for the Bayesian estimator, which matches the
  round order to the current posterior width and draws beta uniformly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .simulator import BETA_IM, BETA_RE, ExperimentSpec, RoundSpec

__all__ = [
    "DesignPolicy",
    "ts_single_round_schedule",
    "ts_multi_round_schedule",
    "adaptive_order",
    "bayes_adaptive_next",
    "BayesAdaptivePolicy",
    "schedule_k_tot",
    "save_schedule",
]

#: Posterior-width multiplier in the adaptive order rule.
ADAPTIVE_WIDTH_FACTOR = 1.25


@dataclass(frozen=True)
class DesignPolicy:
    """A named schedule family with its budget parameters."""

    kind: str
    K: int | None = None
    k_err_cap: int | None = None
    n_budget: int | None = None

    _KINDS = ("ts_single_round_cycle", "ts_multi_round", "bayes_adaptive")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown design kind {self.kind!r}")
        for name in ("K", "k_err_cap", "n_budget"):
            val = getattr(self, name)
            if val is not None and val < 1:
                raise ValueError(f"{name} must be positive when given")


def ts_single_round_schedule(K: int, N: int):
    """Budget N single-round experiments over the 2K cells (k, beta).

    Cells are ordered (1, 0), (1, pi/2), ..., (K, 0), (K, pi/2); each
    receives N // (2K) experiments and the remainder is distributed
    round-robin in cell order, so per-cell counts differ by at most
    one.  Returns (ExperimentSpec, repetitions) pairs.
    """
    if K < 1:
        raise ValueError("need K >= 1")
    if N < 1:
        raise ValueError("need a positive experiment budget")
    cells = [
        ExperimentSpec.single_round(k, beta)
        for k in range(1, K + 1)
        for beta in (BETA_RE, BETA_IM)
    ]
    base, extra = divmod(N, len(cells))
    return [(spec, base + (1 if i < extra else 0)) for i, spec in enumerate(cells)]


def ts_multi_round_schedule(K: int) -> ExperimentSpec:
    """The K-round design: k_r = 1, first half beta = 0, rest pi/2.

    The outcome distribution is invariant under round reordering, so
    the fixed block order is a convention, not a constraint.
    """
    if K < 2 or K % 2:
        raise ValueError("the weight-pair design needs even K >= 2")
    half = K // 2
    rounds = tuple(
        RoundSpec(k=1, beta=BETA_RE if i < half else BETA_IM) for i in range(K)
    )
    return ExperimentSpec(rounds=rounds)


def adaptive_order(posterior_sigma, k_err_cap: int) -> int:
    """Round order matched to the posterior width, capped by coherence.

    K = min(ceil(1.25 / sigma), cap); an undefined or infinite width
    (nothing learned yet) forces the base case K = 1.
    """
    if k_err_cap < 1:
        raise ValueError("coherence cap must be >= 1")
    if posterior_sigma is None or not math.isfinite(posterior_sigma):
        return 1
    if posterior_sigma <= 0.0:
        raise ValueError("posterior width must be positive or undefined")
    return min(math.ceil(ADAPTIVE_WIDTH_FACTOR / posterior_sigma), k_err_cap)


def bayes_adaptive_next(posterior_sigma, k_err_cap: int,
                        rng: np.random.Generator, cycle: int = 0,
                        random_k: bool = False) -> tuple[int, float]:
    """Next (k, beta) for the adaptive Bayesian design.

    k cycles deterministically through 1..K by default (pass the
    running experiment index as ``cycle``); ``random_k`` draws k
    uniformly instead.  beta is uniform on [0, 2 pi).
    """
    K = adaptive_order(posterior_sigma, k_err_cap)
    if random_k:
        k = int(rng.integers(1, K + 1))
    else:
        k = 1 + cycle % K
    beta = float(rng.uniform(0.0, 2.0 * math.pi))
    return k, beta


class BayesAdaptivePolicy:
    """Stateful wrapper advancing the adaptive design's cycle position."""

    def __init__(self, k_err_cap: int, rng: np.random.Generator,
                 random_k: bool = False):
        if k_err_cap < 1:
            raise ValueError("coherence cap must be >= 1")
        self.k_err_cap = int(k_err_cap)
        self.rng = rng
        self.random_k = bool(random_k)
        self._cycle = 0

    def next(self, posterior_sigma) -> tuple[int, float]:
        k, beta = bayes_adaptive_next(
            posterior_sigma, self.k_err_cap, self.rng,
            cycle=self._cycle, random_k=self.random_k,
        )
        self._cycle += 1
        return k, beta


def schedule_k_tot(schedule) -> int:
    """Total applications of the unitary across a (spec, reps) schedule."""
    return sum(reps * sum(r.k for r in spec.rounds) for spec, reps in schedule)


def save_schedule(schedule, path) -> None:
    """Expand a (spec, reps) schedule to per-experiment CSV rows."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("experiment_id,round_id,k,beta\n")
        exp_id = 0
        for spec, reps in schedule:
            for _ in range(reps):
                for rid, r in enumerate(spec.rounds):
                    fh.write(f"{exp_id},{rid},{r.k},{float(r.beta)!r}\n")
                exp_id += 1
