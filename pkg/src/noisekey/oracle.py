"""Desk-scale exhaustive eavesdropper.

Everything here enumerates, on deliberately tiny parameters, the candidate
sets the closed-form analysis only counts: information vectors consistent
with a parity vector, grouping keys consistent with an observed stream and
parity, the growth of those sets under hypothesized error patterns, and
the statistical test that separates the true key from impostors.

All enumerations are guarded so a mistyped parameter cannot turn a unit
test into an overnight job.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .grouping import CommonKey, split_stream
from .rs import CodeSpec, bits_to_symbols, decode_block, encode_parity

MAX_KEY_LENGTH = 20
MAX_INFO_ENUM_LOG2 = 24
MAX_WORK = 1 << 26


def admissible_keys(key_length: int, balance_limit: float) -> np.ndarray:
    """All admissible keys as a (count, key_length) bit matrix, MSB first."""
    if key_length > MAX_KEY_LENGTH:
        raise ValueError(f"exhaustive key listing is capped at {MAX_KEY_LENGTH} bits")
    values = np.arange(1 << key_length, dtype=np.uint32)
    shifts = np.arange(key_length - 1, -1, -1, dtype=np.uint32)
    bits = ((values[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
    ones = bits.sum(axis=1)
    sigma = math.sqrt(key_length / 4.0)
    keep = np.abs(ones - key_length / 2.0) <= balance_limit * sigma
    return bits[keep]


@dataclass(frozen=True, eq=False)
class TinyScenario:
    """One observed situation handed to the exhaustive eavesdropper."""

    code: CodeSpec
    key_space: np.ndarray       # (count, key_length) admissible keys
    x: np.ndarray               # the tapped stream, possibly with bit errors
    parity: np.ndarray          # clean parity of the first group-I block
    offset: int = 0             # known alignment of the key against the stream
    balance_limit: float = 0.0

    @property
    def key_length(self) -> int:
        return self.key_space.shape[1]


def make_scenario(
    code: CodeSpec,
    key_length: int,
    balance_limit: float,
    rng: np.random.Generator,
    ber: float = 0.0,
    stream_bits: int | None = None,
) -> tuple[TinyScenario, CommonKey]:
    """Draw a random stream and true key, leak the first group-I parity.

    The stream is long enough for every admissible key to fill one block;
    with ber > 0 the scenario's stream carries the eavesdropper's bit errors
    while the parity stays clean.
    """
    keys = admissible_keys(key_length, balance_limit)
    if stream_bits is None:
        stream_bits = key_length * code.info_bits
    x = rng.integers(0, 2, size=stream_bits, dtype=np.uint8)
    true_row = keys[rng.integers(0, len(keys))]
    true_key = CommonKey.from_bits(true_row, balance_limit, require_admissible=False)
    block = _first_block_symbols(code, x, true_row, 0)
    parity = encode_parity(code, block)
    x_seen = x.copy()
    if ber > 0.0:
        flips = rng.random(stream_bits) < ber
        x_seen ^= flips.astype(np.uint8)
    scenario = TinyScenario(
        code=code, key_space=keys, x=x_seen, parity=parity, offset=0, balance_limit=balance_limit
    )
    return scenario, true_key


def _first_block_symbols(code: CodeSpec, x: np.ndarray, key_row: np.ndarray, offset: int) -> np.ndarray:
    """Group-I information symbols of the first block under one key."""
    n_bits = code.info_bits
    reps = -(-(offset + len(x)) // len(key_row))
    mask = np.tile(key_row, reps)[offset : offset + len(x)].astype(bool)
    routed = x[mask]
    if len(routed) < n_bits:
        raise ValueError("stream too short to fill one block for this key")
    return bits_to_symbols(routed[:n_bits], code.m)


def _first_block_parities(scenario: TinyScenario) -> np.ndarray:
    """Parity of each candidate key's first group-I block, vectorized over keys."""
    code = scenario.code
    keys = scenario.key_space
    x = scenario.x
    n_bits = code.info_bits
    count, klen = keys.shape
    reps = -(-(scenario.offset + len(x)) // klen)
    masks = np.tile(keys, (1, reps))[:, scenario.offset : scenario.offset + len(x)].astype(bool)
    filled = masks.cumsum(axis=1)
    if (filled[:, -1] < n_bits).any():
        raise ValueError("stream too short to fill one block for every key")
    take = masks & (filled <= n_bits)
    # Stable argsort floats the selected positions to the front, in order.
    order = np.argsort(~take, axis=1, kind="stable")[:, :n_bits]
    bits = x[order]
    weights = 1 << np.arange(code.m - 1, -1, -1)
    symbols = bits.reshape(count, code.k, code.m) @ weights
    fld = code.field
    parity = np.zeros((count, code.n - code.k), dtype=np.int64)
    for i in range(code.k):
        col = symbols[:, i]
        row_logs = code._parity_map_logs[i]
        prod = fld.exp_table[(fld.log_table[col][:, None] + row_logs[None, :]) % fld.mul_order]
        prod = np.where((col[:, None] == 0) | (row_logs[None, :] < 0), 0, prod)
        parity ^= prod
    return parity


def partition_by_parity(scenario: TinyScenario) -> dict[bytes, np.ndarray]:
    """Bucket the admissible keys by the parity their first block induces."""
    parities = _first_block_parities(scenario)
    tags = [p.tobytes() for p in parities]
    buckets: dict[bytes, list[int]] = {}
    for idx, tag in enumerate(tags):
        buckets.setdefault(tag, []).append(idx)
    return {tag: scenario.key_space[idx] for tag, idx in buckets.items()}


def enumerate_info_candidates(code: CodeSpec, parity) -> np.ndarray:
    """All information vectors whose parity equals the given one.

    Exhaustive over the 2^(m*k) info space, chunked to bound memory; the
    result always has exactly 2^(m*(2k-n)) rows.
    """
    if code.info_bits > MAX_INFO_ENUM_LOG2:
        raise ValueError(f"info space 2^{code.info_bits} exceeds the enumeration guard")
    parity = np.asarray(parity, dtype=np.int64)
    fld = code.field
    total = 1 << code.info_bits
    sym_shifts = np.arange(code.k - 1, -1, -1) * code.m
    mask = (1 << code.m) - 1
    hits = []
    chunk = 1 << 20
    for start in range(0, total, chunk):
        values = np.arange(start, min(start + chunk, total), dtype=np.int64)
        symbols = (values[:, None] >> sym_shifts[None, :]) & mask
        pz = np.zeros((len(values), code.n - code.k), dtype=np.int64)
        for i in range(code.k):
            col = symbols[:, i]
            row_logs = code._parity_map_logs[i]
            prod = fld.exp_table[(fld.log_table[col][:, None] + row_logs[None, :]) % fld.mul_order]
            prod = np.where((col[:, None] == 0) | (row_logs[None, :] < 0), 0, prod)
            pz ^= prod
        match = (pz == parity[None, :]).all(axis=1)
        if match.any():
            hits.append(symbols[match])
    if not hits:
        return np.zeros((0, code.k), dtype=np.int64)
    return np.concatenate(hits, axis=0)


@dataclass(frozen=True, eq=False)
class CandidateSet:
    """Key candidates grouped by the error pattern that explains them."""

    per_pattern: dict = field(default_factory=dict)   # pattern tuple -> key bit matrix

    @property
    def patterns(self) -> list[tuple]:
        return list(self.per_pattern.keys())

    @property
    def total_candidates(self) -> int:
        return sum(len(v) for v in self.per_pattern.values())

    def keys_for(self, pattern: tuple) -> np.ndarray:
        return self.per_pattern.get(tuple(pattern), np.zeros((0, 0), dtype=np.uint8))

    def all_keys(self) -> np.ndarray:
        mats = [v for v in self.per_pattern.values() if len(v)]
        if not mats:
            return np.zeros((0, 0), dtype=np.uint8)
        return np.concatenate(mats, axis=0)


def _error_patterns(code: CodeSpec, max_weight: int, unit: str):
    """Yield symbol-space error vectors up to the requested weight.

    unit='symbol' ranges nonzero symbols over the whole alphabet;
    unit='bit' flips individual bits inside the block's information bits.
    """
    k, m = code.k, code.m
    yield (0,) * k
    if unit == "symbol":
        for weight in range(1, max_weight + 1):
            for positions in itertools.combinations(range(k), weight):
                for values in itertools.product(range(1, 1 << m), repeat=weight):
                    vec = [0] * k
                    for pos, val in zip(positions, values):
                        vec[pos] = val
                    yield tuple(vec)
    elif unit == "bit":
        nbits = k * m
        for weight in range(1, max_weight + 1):
            for positions in itertools.combinations(range(nbits), weight):
                vec = [0] * k
                for bit in positions:
                    vec[bit // m] ^= 1 << (m - 1 - bit % m)
                yield tuple(vec)
    else:
        raise ValueError(f"unknown pattern unit {unit!r}")


def enumerate_key_candidates(scenario: TinyScenario) -> CandidateSet:
    """Error-free case: keys whose first-block parity matches the observation."""
    return enumerate_with_errors(scenario, max_weight=0)


def enumerate_with_errors(scenario: TinyScenario, max_weight: int, unit: str = "symbol") -> CandidateSet:
    """Candidate keys per hypothesized error pattern of weight <= max_weight.

    Each pattern e shifts the matching parity to observed + e*parity_map;
    patterns differing as symbol vectors of weight <= t therefore select
    pairwise disjoint key sets.
    """
    code = scenario.code
    if max_weight > code.t:
        raise ValueError(f"patterns beyond {code.t} errors are not separable for this code")
    patterns = list(_error_patterns(code, max_weight, unit))
    if len(scenario.key_space) * len(patterns) > MAX_WORK:
        raise ValueError("scenario exceeds the enumeration work guard")
    buckets = partition_by_parity(scenario)
    empty = scenario.key_space[:0]
    per_pattern = {}
    for pattern in patterns:
        shift = encode_parity(code, np.array(pattern, dtype=np.int64))
        target = (scenario.parity ^ shift).tobytes()
        per_pattern[pattern] = buckets.get(target, empty)
    return CandidateSet(per_pattern=per_pattern)


@dataclass(frozen=True)
class Judgement:
    """Outcome of testing one key guess against observed blocks."""

    consistent: bool
    per_block_errors: list
    decode_failures: int
    mean_errors: float
    threshold: float


def judge_candidate(
    key_bits,
    stream,
    parity_frames,
    code: CodeSpec,
    symbol_error_rate: float,
    offset: int = 0,
) -> Judgement:
    """Regroup the stream under a key guess and score the decode statistics.

    parity_frames is the observed per-group parity sequence: (group, parity)
    pairs with group 1 or 2, in transmission order within each group. A guess
    is consistent when every paired block decodes and the mean corrected
    error count stays within four standard errors of the channel's expected
    k * symbol_error_rate.
    """
    key = CommonKey.from_bits(key_bits, 0.0, require_admissible=False)
    groups = split_stream(np.asarray(stream, dtype=np.uint8), key, offset)
    per_group = {1: groups.group1, 2: groups.group2}
    cursor = {1: 0, 2: 0}
    n_bits = code.info_bits
    errors: list[int] = []
    failures = 0
    for group, parity in parity_frames:
        data = per_group[group]
        start = cursor[group]
        if start + n_bits > len(data):
            break
        cursor[group] = start + n_bits
        info = bits_to_symbols(data[start : start + n_bits], code.m)
        result = decode_block(code, np.concatenate([info, np.asarray(parity, dtype=np.int64)]))
        if not result.ok:
            failures += 1
        else:
            errors.append(result.corrected)
    blocks = failures + len(errors)
    if blocks == 0:
        raise ValueError("no complete blocks to judge")
    expected = code.k * symbol_error_rate
    spread = math.sqrt(code.k * symbol_error_rate * (1.0 - symbol_error_rate) / blocks)
    threshold = expected + 4.0 * spread
    mean = sum(errors) / len(errors) if errors else math.inf
    return Judgement(
        consistent=failures == 0 and mean <= threshold,
        per_block_errors=errors,
        decode_failures=failures,
        mean_errors=mean,
        threshold=threshold,
    )


def class_size_by_parity(scenario: TinyScenario) -> np.ndarray:
    """Candidate-class size for every possible parity value (zeros included)."""
    code = scenario.code
    counts = np.zeros(1 << code.parity_bits, dtype=np.int64)
    sym_shifts = np.arange(code.n - code.k - 1, -1, -1) * code.m
    for tag, keys in partition_by_parity(scenario).items():
        symbols = np.frombuffer(tag, dtype=np.int64)
        index = int((symbols << sym_shifts).sum())
        counts[index] = len(keys)
    return counts
