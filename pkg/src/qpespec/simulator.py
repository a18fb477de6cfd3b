"""Sampling model for single-ancilla phase estimation experiments.

An experiment applies R rounds to one prepared state.  Round r applies
the controlled unitary k_r times, rotates the ancilla by beta_r and
measures it in the X basis, yielding a bit m_r.  For a spectrum
{(phi_j, A_j)} the outcome distribution is

    P(m_1..m_R) = sum_j A_j  prod_r cos^2(k_r phi_j / 2 + (beta_r - m_r pi) / 2)

which is an incoherent mixture over eigenstates: each experiment behaves
as if an eigenstate j were drawn with probability A_j, after which the
round outcomes are independent Bernoulli draws.

Depolarizing noise with characteristic length k_err replaces each
round's outcome with a fair coin flip with probability 1 - e^{-k/k_err},
i.e. p -> p e^{-k/k_err} + (1 - e^{-k/k_err}) / 2, where k is that
round's controlled-unitary count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .spectrum import Spectrum

__all__ = [
    "RoundSpec",
    "ExperimentSpec",
    "NoiseModel",
    "AggregatedCounts",
    "round_outcome_prob",
    "experiment_outcome_prob",
    "hamming_prob",
    "hamming_pmf",
    "apply_depolarizing",
    "sample_experiment",
    "run_schedule",
    "hamming_design_rounds",
]

BETA_RE = 0.0
BETA_IM = math.pi / 2.0


@dataclass(frozen=True)
class RoundSpec:
    """One phase estimation round: k unitary applications, final rotation beta."""

    k: int
    beta: float

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("round order k must be >= 1")


@dataclass(frozen=True)
class ExperimentSpec:
    """An ordered sequence of rounds applied to a single state preparation."""

    rounds: tuple

    def __post_init__(self):
        rounds = tuple(self.rounds)
        if not rounds:
            raise ValueError("experiment must contain at least one round")
        object.__setattr__(self, "rounds", rounds)

    @property
    def K(self) -> int:
        """Total number of controlled-unitary applications."""
        return sum(r.k for r in self.rounds)

    @classmethod
    def single_round(cls, k: int, beta: float) -> "ExperimentSpec":
        return cls(rounds=(RoundSpec(k=k, beta=beta),))


@dataclass(frozen=True)
class NoiseModel:
    """Per-round depolarizing noise; ``kind`` is 'none' or 'depolarizing'."""

    kind: str = "none"
    k_err: float = math.inf

    def __post_init__(self):
        if self.kind not in ("none", "depolarizing"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "depolarizing" and not self.k_err > 0:
            raise ValueError("k_err must be positive")

    @classmethod
    def none(cls) -> "NoiseModel":
        return cls(kind="none")

    @classmethod
    def depolarizing(cls, k_err: float) -> "NoiseModel":
        return cls(kind="depolarizing", k_err=k_err)

    def survival(self, k) -> float:
        """The coherent fraction e^{-k/k_err} after k unitary applications."""
        if self.kind == "none":
            return np.ones_like(np.asarray(k, dtype=float)) if np.ndim(k) else 1.0
        return np.exp(-np.asarray(k, dtype=float) / self.k_err) if np.ndim(k) else math.exp(-k / self.k_err)


def apply_depolarizing(p, k, k_err: float):
    """Mix an outcome probability with a fair coin: p e^{-k/k_err} + (1-e^{-k/k_err})/2."""
    s = np.exp(-np.asarray(k, dtype=float) / k_err)
    out = np.asarray(p, dtype=float) * s + (1.0 - s) / 2.0
    if np.ndim(p) == 0 and np.ndim(k) == 0:
        return float(out)
    return out


def round_outcome_prob(spectrum: Spectrum, k: int, beta: float, m: int) -> float:
    """Probability of outcome m in a lone round (k, beta)."""
    if m not in (0, 1):
        raise ValueError("outcome must be 0 or 1")
    c = np.cos(k * spectrum.phases / 2.0 + (beta - m * math.pi) / 2.0)
    return float(np.sum(spectrum.weights * c * c))


def experiment_outcome_prob(spectrum: Spectrum, spec: ExperimentSpec, outcomes,
                            noise: NoiseModel | None = None) -> float:
    """Probability of an outcome bit-string for a multi-round experiment.

    With a depolarizing ``noise`` model each round's conditional outcome
    probability is mixed with a fair coin using that round's own k.
    """
    outcomes = tuple(outcomes)
    if len(outcomes) != len(spec.rounds):
        raise ValueError("one outcome bit per round required")
    if any(m not in (0, 1) for m in outcomes):
        raise ValueError("outcomes must be 0 or 1 bits")
    total = np.ones_like(spectrum.phases)
    for r, m in zip(spec.rounds, outcomes):
        c = np.cos(r.k * spectrum.phases / 2.0 + (r.beta - m * math.pi) / 2.0)
        p = c * c
        if noise is not None and noise.kind == "depolarizing":
            p = apply_depolarizing(p, r.k, noise.k_err)
        total = total * p
    return float(np.sum(spectrum.weights * total))


def _hamming_bernoulli_probs(spectrum: Spectrum, noise: NoiseModel | None):
    """Per-eigenvalue outcome-1 probabilities of the two k=1 round types.

    Returns (p_re, p_im): probabilities of m=1 for beta=0 and beta=pi/2
    rounds, one entry per eigenvalue, noise applied if given.
    """
    half = spectrum.phases / 2.0
    p_re = np.sin(half) ** 2
    p_im = np.sin(half + math.pi / 4.0) ** 2
    if noise is not None and noise.kind == "depolarizing":
        p_re = apply_depolarizing(p_re, 1, noise.k_err)
        p_im = apply_depolarizing(p_im, 1, noise.k_err)
    return p_re, p_im


def hamming_pmf(spectrum: Spectrum, K: int, noise: NoiseModel | None = None) -> np.ndarray:
    """Joint pmf of the Hamming-weight pair (hw0, hw1) of the K-round design.

    The design applies K rounds with k_r = 1, the first K/2 with beta = 0
    and the rest with beta = pi/2; hw0 and hw1 are the numbers of 1
    outcomes in each half.  Returns an array of shape (K/2+1, K/2+1)
    indexed [hw0, hw1].
    """
    if K < 2 or K % 2:
        raise ValueError("K must be a positive even integer")
    half = K // 2
    p_re, p_im = _hamming_bernoulli_probs(spectrum, noise)
    ks = np.arange(half + 1)
    pmf = np.zeros((half + 1, half + 1))
    for a, pr, pi_ in zip(spectrum.weights, p_re, p_im):
        b_re = stats.binom.pmf(ks, half, pr)
        b_im = stats.binom.pmf(ks, half, pi_)
        pmf += a * np.outer(b_re, b_im)
    return pmf


def hamming_prob(spectrum: Spectrum, K: int, hw0: int, hw1: int,
                 noise: NoiseModel | None = None) -> float:
    """Probability of observing Hamming weights (hw0, hw1) in the K-round design."""
    half = K // 2
    if K < 2 or K % 2:
        raise ValueError("K must be a positive even integer")
    if not (0 <= hw0 <= half and 0 <= hw1 <= half):
        raise ValueError("Hamming weights must lie in [0, K/2]")
    p_re, p_im = _hamming_bernoulli_probs(spectrum, noise)
    val = np.sum(
        spectrum.weights
        * stats.binom.pmf(hw0, half, p_re)
        * stats.binom.pmf(hw1, half, p_im)
    )
    return float(val)


def sample_experiment(spectrum: Spectrum, spec: ExperimentSpec,
                      noise: NoiseModel | None = None,
                      rng: np.random.Generator | None = None):
    """Draw one outcome bit-string for an experiment.

    An eigenstate index is drawn with probability A_j, after which the
    rounds are conditionally independent coin flips.
    """
    if rng is None:
        rng = np.random.default_rng()
    j = rng.choice(spectrum.n_eig, p=spectrum.weights) if spectrum.n_eig > 1 else 0
    phi = spectrum.phases[j]
    bits = []
    for r in spec.rounds:
        p1 = math.cos(r.k * phi / 2.0 + (r.beta - math.pi) / 2.0) ** 2
        if noise is not None and noise.kind == "depolarizing":
            p1 = apply_depolarizing(p1, r.k, noise.k_err)
        bits.append(int(rng.random() < p1))
    return tuple(bits)


@dataclass
class AggregatedCounts:
    """Tallied outcomes of a schedule of experiments.

    ``mode`` is 'single_round' (tallies keyed by (k, beta, m), shots
    keyed by (k, beta)) or 'multi_round' (tallies keyed by the
    Hamming-weight pair (hw0, hw1) of the K-round design).  Merging is
    commutative and associative, so partial tallies may be combined in
    any order.
    """

    mode: str
    tallies: dict = field(default_factory=dict)
    shots: dict = field(default_factory=dict)
    K: int | None = None
    total_shots: int = 0
    k_tot: int = 0
    seed: int | None = None

    def merge(self, other: "AggregatedCounts") -> "AggregatedCounts":
        if self.mode != other.mode or self.K != other.K:
            raise ValueError("cannot merge counts of different modes or designs")
        tallies = dict(self.tallies)
        for key, n in other.tallies.items():
            tallies[key] = tallies.get(key, 0) + n
        shots = dict(self.shots)
        for key, n in other.shots.items():
            shots[key] = shots.get(key, 0) + n
        return AggregatedCounts(
            mode=self.mode,
            tallies=tallies,
            shots=shots,
            K=self.K,
            total_shots=self.total_shots + other.total_shots,
            k_tot=self.k_tot + other.k_tot,
            seed=None,
        )

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(f"# mode={self.mode}\n")
            fh.write(f"# K={self.K if self.K is not None else ''}\n")
            fh.write(f"# total_shots={self.total_shots}\n")
            fh.write(f"# k_tot={self.k_tot}\n")
            fh.write(f"# seed={self.seed if self.seed is not None else ''}\n")
            if self.mode == "single_round":
                fh.write("k,beta,m,count,shots\n")
                for (k, beta, m) in sorted(self.tallies):
                    fh.write(
                        f"{k},{beta:.17g},{m},{self.tallies[(k, beta, m)]},"
                        f"{self.shots[(k, beta)]}\n"
                    )
            else:
                fh.write("K,hw0,hw1,count,shots\n")
                for (hw0, hw1) in sorted(self.tallies):
                    fh.write(f"{self.K},{hw0},{hw1},{self.tallies[(hw0, hw1)]},{self.total_shots}\n")

    @classmethod
    def from_csv(cls, path) -> "AggregatedCounts":
        meta = {}
        rows = []
        header = None
        with open(path, "r", encoding="ascii") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    key, _, val = line[1:].strip().partition("=")
                    meta[key.strip()] = val.strip()
                elif header is None:
                    header = line.split(",")
                else:
                    rows.append(line.split(","))
        mode = meta.get("mode")
        if mode not in ("single_round", "multi_round"):
            raise ValueError(f"unrecognized counts file mode {mode!r}")
        out = cls(
            mode=mode,
            K=int(meta["K"]) if meta.get("K") else None,
            total_shots=int(meta.get("total_shots", 0) or 0),
            k_tot=int(meta.get("k_tot", 0) or 0),
            seed=int(meta["seed"]) if meta.get("seed") else None,
        )
        if mode == "single_round":
            for k, beta, m, count, shots in rows:
                key = (int(k), float(beta), int(m))
                out.tallies[key] = out.tallies.get(key, 0) + int(count)
                out.shots[(int(k), float(beta))] = int(shots)
        else:
            for _K, hw0, hw1, count, _shots in rows:
                out.tallies[(int(hw0), int(hw1))] = int(count)
        return out


def hamming_design_rounds(spec: ExperimentSpec) -> int | None:
    """Return K if ``spec`` is the K-round Hamming design, else None.

    The design has all k_r = 1 with the first half of the rounds at
    beta = 0 and the second half at beta = pi/2.
    """
    rounds = spec.rounds
    K = len(rounds)
    if K < 2 or K % 2:
        return None
    half = K // 2
    if any(r.k != 1 for r in rounds):
        return None
    if any(r.beta != BETA_RE for r in rounds[:half]):
        return None
    if any(r.beta != BETA_IM for r in rounds[half:]):
        return None
    return K


def run_schedule(spectrum: Spectrum, schedule, noise: NoiseModel | None = None,
                 seed=None) -> AggregatedCounts:
    """Sample a schedule of (ExperimentSpec, repetitions) pairs and aggregate.

    Single-round schedules aggregate per (k, beta) cell; schedules made
    of the K-round Hamming design aggregate the Hamming-weight pair
    histogram.  Mixing the two kinds is an error.  Sampling is exact:
    tallies are drawn from the closed-form outcome distributions
    (binomial per single-round cell; eigenvalue mixture of independent
    binomial pairs for the Hamming design).
    """
    schedule = [(spec, int(reps)) for spec, reps in schedule]
    if not schedule:
        raise ValueError("schedule must be non-empty")
    single = [len(spec.rounds) == 1 for spec, _ in schedule]
    if all(single):
        mode = "single_round"
    elif not any(single):
        mode = "multi_round"
    else:
        raise ValueError("schedule mixes single-round and multi-round experiments")
    rng = np.random.default_rng(seed)
    seed_val = seed if isinstance(seed, (int, np.integer)) else None

    if mode == "single_round":
        out = AggregatedCounts(mode=mode, seed=seed_val)
        for spec, reps in schedule:
            if reps <= 0:
                continue
            r = spec.rounds[0]
            p1 = round_outcome_prob(spectrum, r.k, r.beta, 1)
            if noise is not None and noise.kind == "depolarizing":
                p1 = apply_depolarizing(p1, r.k, noise.k_err)
            n1 = int(rng.binomial(reps, p1))
            key0, key1 = (r.k, r.beta, 0), (r.k, r.beta, 1)
            out.tallies[key0] = out.tallies.get(key0, 0) + (reps - n1)
            out.tallies[key1] = out.tallies.get(key1, 0) + n1
            out.shots[(r.k, r.beta)] = out.shots.get((r.k, r.beta), 0) + reps
            out.total_shots += reps
            out.k_tot += reps * spec.K
        return out

    K = hamming_design_rounds(schedule[0][0])
    if K is None:
        raise ValueError("multi-round schedules must use the K-round Hamming design")
    for spec, _ in schedule[1:]:
        if hamming_design_rounds(spec) != K:
            raise ValueError("all multi-round experiments must share one design")
    half = K // 2
    p_re, p_im = _hamming_bernoulli_probs(spectrum, noise)
    hist = np.zeros((half + 1, half + 1), dtype=np.int64)
    total = 0
    for _, reps in schedule:
        if reps <= 0:
            continue
        counts_j = rng.multinomial(reps, spectrum.weights)
        for j, nj in enumerate(counts_j):
            if nj == 0:
                continue
            hw0 = rng.binomial(half, p_re[j], size=nj)
            hw1 = rng.binomial(half, p_im[j], size=nj)
            np.add.at(hist, (hw0, hw1), 1)
        total += reps
    out = AggregatedCounts(mode=mode, K=K, seed=seed_val)
    for hw0 in range(half + 1):
        for hw1 in range(half + 1):
            if hist[hw0, hw1]:
                out.tallies[(hw0, hw1)] = int(hist[hw0, hw1])
    out.total_shots = total
    out.k_tot = total * K
    return out
