"""Closed-form security quantification.

Everything here is finite arithmetic on the protocol parameters: binomial
tails for the reliability and low-noise budgets, counting exponents for the
eavesdropper's candidate sets, the entropy of correctable error patterns,
and the resulting effective key length

    key_length - m(n-k) + m*k*h(ber) + log2(1 - delta)

which is the log2 cost of exhausting the grouping-key candidates consistent
with one block of leaked parity.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, asdict

import numpy as np
from scipy.special import gammaln, logsumexp, ndtr

from .amplify import (
    CapacityParams,
    binary_entropy,
    capacity_lower_bound,
    fluctuation_adjusted_ber,
    leakage_bound,
)


@dataclass(frozen=True)
class TailQuery:
    """One binomial tail question: Pr{X > threshold} or Pr{X < threshold}."""

    trials: int
    p: float
    threshold: float
    direction: str = "above"

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if self.trials < 0 or self.threshold > self.trials:
            raise ValueError("need 0 <= threshold <= trials")
        if self.direction not in ("above", "below"):
            raise ValueError("direction must be 'above' or 'below'")


def _tail_support(q: TailQuery) -> np.ndarray:
    if q.direction == "above":
        lo = math.floor(q.threshold) + 1
        return np.arange(lo, q.trials + 1)
    hi = math.ceil(q.threshold) - 1
    return np.arange(0, hi + 1)


def log_binomial_tail(q: TailQuery, mode: str = "exact") -> float:
    """Natural log of the tail probability; -inf for an empty tail.

    The exact mode sums pmf terms in log space, so it stays meaningful far
    below the smallest positive float.
    """
    if mode == "normal":
        mean = q.trials * q.p
        sd = math.sqrt(q.trials * q.p * (1.0 - q.p))
        if sd == 0.0:
            hit = mean > q.threshold if q.direction == "above" else mean < q.threshold
            return 0.0 if hit else -math.inf
        z = (q.threshold - mean) / sd
        p = float(ndtr(-z)) if q.direction == "above" else float(ndtr(z))
        return math.log(p) if p > 0.0 else -math.inf
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    ks = _tail_support(q)
    if len(ks) == 0:
        return -math.inf
    if q.p == 0.0:
        return 0.0 if 0 in ks else -math.inf
    if q.p == 1.0:
        return 0.0 if q.trials in ks else -math.inf
    log_pmf = (
        gammaln(q.trials + 1)
        - gammaln(ks + 1)
        - gammaln(q.trials - ks + 1)
        + ks * math.log(q.p)
        + (q.trials - ks) * math.log1p(-q.p)
    )
    return float(logsumexp(log_pmf))


def log2_binomial_tail(q: TailQuery, mode: str = "exact") -> float:
    """The same tail in log2, for exponent bookkeeping."""
    return log_binomial_tail(q, mode) / math.log(2.0)


def binomial_tail(q: TailQuery, mode: str = "exact") -> float:
    """The tail probability itself (0.0 once below the float range)."""
    lg = log_binomial_tail(q, mode)
    return math.exp(lg) if lg > -745.0 else 0.0


def symbol_error_rate(ber: float, m: int) -> float:
    """Probability that an m-bit symbol is hit by at least one bit error."""
    return 1.0 - (1.0 - ber) ** m


def candidate_count_log2(key_length: int, m: int, n: int, k: int, delta: float) -> float:
    """log2 of the average number of admissible grouping keys consistent with
    one observed parity vector: key_length - m(n-k) + log2(1 - delta)."""
    exponent = key_length - m * (n - k)
    if exponent <= 0:
        warnings.warn(
            "key_length does not exceed the parity bits per block; "
            "candidate counting gives the eavesdropper a unique key",
            stacklevel=2,
        )
    return exponent + math.log2(1.0 - delta)


@dataclass(frozen=True)
class PatternEntropy:
    """Entropy of the correctable bit-error patterns of one block."""

    truncated: float        # sum restricted to weights <= (d-1)/2
    approximation: float    # m*k*h(ber), the full-range value
    tail_probability: float # Pr{weight > (d-1)/2}, should be << 1


def error_pattern_entropy(m: int, k: int, ber: float, d: int) -> PatternEntropy:
    """-sum over correctable weights of C(mk,w) p_w log2 p_w, plus the
    m*k*h(ber) approximation it converges to when the tail is negligible."""
    mk = m * k
    approx = mk * binary_entropy(ber)
    if ber == 0.0:
        return PatternEntropy(truncated=0.0, approximation=0.0, tail_probability=0.0)
    t = (d - 1) // 2
    ws = np.arange(0, min(t, mk) + 1)
    log_weights = (
        gammaln(mk + 1)
        - gammaln(ws + 1)
        - gammaln(mk - ws + 1)
        + ws * math.log(ber)
        + (mk - ws) * math.log1p(-ber)
    )
    weights = np.exp(log_weights)
    log2_pn = ws * math.log2(ber) + (mk - ws) * math.log2(1.0 - ber)
    truncated = float(np.sum(weights * (-log2_pn)))
    tail = max(0.0, 1.0 - float(weights.sum()))
    if tail > 0.01:
        warnings.warn(
            f"{tail:.3f} of the error-pattern mass lies beyond the correctable range; "
            "the truncated entropy undercounts it",
            stacklevel=2,
        )
    return PatternEntropy(truncated=truncated, approximation=approx, tail_probability=tail)


def average_pattern_count_log2(m: int, k: int, ber: float) -> float:
    """log2 C(mk, mean_errors) at the real-valued mean weight, via log-gamma."""
    if not 0.0 <= ber < 1.0:
        raise ValueError("ber must lie in [0, 1)")
    mk = m * k
    mean = ber * mk
    return float(
        (gammaln(mk + 1) - gammaln(mean + 1) - gammaln(mk - mean + 1)) / math.log(2.0)
    )


def effective_key_length(key_length: int, m: int, n: int, k: int, ber: float, delta: float) -> float:
    """log2 of the exhaustive-search workload over key candidates and error
    patterns; equals candidate_count_log2 plus the m*k*h(ber) equivocation."""
    return candidate_count_log2(key_length, m, n, k, delta) + m * k * binary_entropy(ber)


@dataclass(frozen=True)
class GammaBudget:
    """The three failure/leakage probabilities whose maximum bounds gamma."""

    decode_failure: float   # any of the unit's blocks exceeds t correctable errors
    low_noise_tail: float   # unit error count falls below the guarded minimum
    leakage: float          # residual eavesdropper information per key bit
    gamma: float
    per_block_failure: float
    key_bits_real: float
    capacity_rate: float


def gamma_report(params: CapacityParams, bob_ber: float, method: int = 1, mode: str = "exact") -> GammaBudget:
    """Evaluate the three budget components for one operating point.

    Reliability uses the symbol-error rate at the receiver: in method 1 the
    parity symbols arrive error-free, so only the k information symbols count
    as trials; method 2 exposes all n symbols.
    """
    code = params.code
    p_eff_bob = symbol_error_rate(bob_ber, code.m)
    trials = code.k if method == 1 else code.n
    eps = binomial_tail(TailQuery(trials=trials, p=p_eff_bob, threshold=code.t, direction="above"), mode)
    decode_failure = 1.0 - (1.0 - eps) ** params.unit_blocks

    p_adj = fluctuation_adjusted_ber(params)
    low_noise = binomial_tail(
        TailQuery(
            trials=params.unit_info_bits,
            p=params.eve_ber,
            threshold=params.unit_info_bits * p_adj,
            direction="below",
        ),
        mode,
    )

    bound = capacity_lower_bound(params)
    leak = leakage_bound(params.safety_bits, bound.key_bits_real) if bound.secure else 1.0
    return GammaBudget(
        decode_failure=decode_failure,
        low_noise_tail=low_noise,
        leakage=leak,
        gamma=max(decode_failure, low_noise, leak),
        per_block_failure=eps,
        key_bits_real=bound.key_bits_real,
        capacity_rate=bound.rate,
    )


@dataclass(frozen=True)
class RateMargin:
    """Parity bits per block versus secret-key bits per block.

    When parity_bits exceeds key_bits_per_block, listing candidates from the
    leaked parity is already the eavesdropper's cheapest route; harvested
    keys cannot shrink her search below it.
    """

    parity_bits: int
    key_bits_per_block: float
    holds: bool


def parity_key_margin(params: CapacityParams) -> RateMargin:
    bound = capacity_lower_bound(params)
    per_block = bound.key_bits_real / params.unit_blocks
    parity_bits = params.code.parity_bits
    return RateMargin(
        parity_bits=parity_bits,
        key_bits_per_block=per_block,
        holds=parity_bits > per_block and parity_bits > 0,
    )


@dataclass(frozen=True)
class SecurityReport:
    """Everything the analyzer knows about one configuration."""

    key_length: int
    delta: float
    log2_candidates: float
    pattern_entropy: float
    pattern_entropy_approx: float
    log2_attack_cost: float
    effective_key_bits: float
    parity_bits: int
    key_bits_per_block: float
    margin_holds: bool
    decode_failure: float
    low_noise_tail: float
    leakage: float
    gamma: float
    capacity_rate: float
    key_bits_real: float

    def to_dict(self) -> dict:
        return asdict(self)


def security_report(
    key_length: int,
    balance_limit: float,
    params: CapacityParams,
    bob_ber: float,
    method: int = 1,
    delta_mode: str = "exact",
) -> SecurityReport:
    from .grouping import outside_set_probability

    code = params.code
    delta = outside_set_probability(key_length, balance_limit, delta_mode)
    log2_cand = candidate_count_log2(key_length, code.m, code.n, code.k, delta)
    entropy = error_pattern_entropy(code.m, code.k, params.eve_ber, code.d)
    budget = gamma_report(params, bob_ber, method)
    margin = parity_key_margin(params)
    return SecurityReport(
        key_length=key_length,
        delta=delta,
        log2_candidates=log2_cand,
        pattern_entropy=entropy.truncated,
        pattern_entropy_approx=entropy.approximation,
        log2_attack_cost=entropy.truncated + log2_cand,
        effective_key_bits=effective_key_length(
            key_length, code.m, code.n, code.k, params.eve_ber, delta
        ),
        parity_bits=margin.parity_bits,
        key_bits_per_block=margin.key_bits_per_block,
        margin_holds=margin.holds,
        decode_failure=budget.decode_failure,
        low_noise_tail=budget.low_noise_tail,
        leakage=budget.leakage,
        gamma=budget.gamma,
        capacity_rate=budget.capacity_rate,
        key_bits_real=budget.key_bits_real,
    )


def capacity_table(code, eve_ber: float, bob_ber: float, columns, method: int = 1) -> list[dict]:
    """One analyzer column per (unit_blocks, fluctuation_sigmas, safety_bits)."""
    rows = []
    for unit_blocks, sigmas, safety in columns:
        params = CapacityParams(
            code=code,
            eve_ber=eve_ber,
            unit_blocks=unit_blocks,
            fluctuation_sigmas=sigmas,
            safety_bits=safety,
        )
        budget = gamma_report(params, bob_ber, method)
        rows.append(
            {
                "unit_blocks": unit_blocks,
                "fluctuation_sigmas": sigmas,
                "safety_bits": safety,
                "decode_failure": budget.decode_failure,
                "low_noise_tail": budget.low_noise_tail,
                "leakage": budget.leakage,
                "gamma": budget.gamma,
                "capacity_rate": budget.capacity_rate,
                "key_bits_per_unit": budget.key_bits_real,
            }
        )
    return rows
