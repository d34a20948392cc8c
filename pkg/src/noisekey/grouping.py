"""Key-driven stream grouping.

A pre-shared binary key routes each bit of a random stream into group I
(key bit 1) or group II (key bit 0), repeating the key cyclically. Only
keys whose 1-count stays within `balance_limit` standard deviations of
half the key length are admissible, which guarantees that coding one
block consumes every key bit at least once (see `block_fits_key_period`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp, ndtr


class FramingError(ValueError):
    """Group lengths cannot be merged back into one stream."""


def validate_key(bits, balance_limit: float) -> bool:
    """True iff the 1-count deviates from length/2 by at most balance_limit sigmas."""
    bits = np.asarray(bits)
    n = len(bits)
    if n < 2:
        raise ValueError("key must have at least 2 bits")
    sigma = math.sqrt(n / 4.0)
    return abs(int(bits.sum()) - n / 2.0) <= balance_limit * sigma


@dataclass(frozen=True, eq=False)
class CommonKey:
    """An N-bit grouping key plus the balance limit it was sampled under."""

    bits: np.ndarray
    balance_limit: float

    @classmethod
    def from_bits(cls, bits, balance_limit: float, require_admissible: bool = True) -> "CommonKey":
        arr = np.asarray(bits, dtype=np.uint8).copy()
        if require_admissible and not validate_key(arr, balance_limit):
            raise ValueError("key is outside the admissible balance window")
        arr.setflags(write=False)
        return cls(bits=arr, balance_limit=balance_limit)

    @property
    def length(self) -> int:
        return len(self.bits)

    @property
    def ones(self) -> int:
        return int(self.bits.sum())

    @property
    def zeros(self) -> int:
        return self.length - self.ones

    @property
    def admissible(self) -> bool:
        return validate_key(self.bits, self.balance_limit)

    def to_hex(self) -> str:
        """Lowercase hex, most significant bit first; length must be a multiple of 4."""
        if self.length % 4 != 0:
            raise ValueError("hex form requires a key length divisible by 4")
        value = int("".join("1" if b else "0" for b in self.bits), 2)
        return f"{value:0{self.length // 4}x}"


def key_from_hex(text: str, balance_limit: float, require_admissible: bool = True) -> CommonKey:
    text = text.strip()
    n = 4 * len(text)
    value = int(text, 16)
    bits = [(value >> (n - 1 - i)) & 1 for i in range(n)]
    return CommonKey.from_bits(bits, balance_limit, require_admissible=require_admissible)


def save_key(path, key: CommonKey) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(key.to_hex() + "\n")


def load_key(path, balance_limit: float) -> CommonKey:
    """Read a one-line hex key file; admissibility is enforced."""
    with open(path, "r", encoding="ascii") as fh:
        return key_from_hex(fh.readline(), balance_limit)


def sample_key(length: int, balance_limit: float, rng: np.random.Generator) -> CommonKey:
    """Uniform draw over the admissible set by rejection from all bitstrings."""
    if length < 2:
        raise ValueError("key must have at least 2 bits")
    while True:
        bits = rng.integers(0, 2, size=length, dtype=np.uint8)
        if validate_key(bits, balance_limit):
            return CommonKey.from_bits(bits, balance_limit)


def outside_set_probability(length: int, balance_limit: float, mode: str = "exact") -> float:
    """Probability that a uniform bitstring falls outside the admissible set.

    exact: sums the binomial distribution of the 1-count over the window
           |count - length/2| <= balance_limit * sqrt(length/4), in log space.
    normal: the Gaussian approximation, 2 * Phi(-balance_limit).
    """
    if length < 2:
        raise ValueError("key must have at least 2 bits")
    if mode == "normal":
        return float(2.0 * ndtr(-balance_limit))
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    sigma = math.sqrt(length / 4.0)
    counts = np.arange(length + 1)
    inside = np.abs(counts - length / 2.0) <= balance_limit * sigma
    if not inside.any():
        return 1.0
    log_pmf = (
        gammaln(length + 1)
        - gammaln(counts[inside] + 1)
        - gammaln(length - counts[inside] + 1)
        - length * math.log(2.0)
    )
    return float(1.0 - math.exp(logsumexp(log_pmf)))


@dataclass(frozen=True, eq=False)
class GroupStreams:
    """The two routed sub-streams plus the key offset used to produce them."""

    group1: np.ndarray
    group2: np.ndarray
    offset: int = 0

    @property
    def consumed(self) -> int:
        return len(self.group1) + len(self.group2)


def _key_mask(key: CommonKey, length: int, offset: int) -> np.ndarray:
    reps = -(-(offset + length) // key.length)
    return np.tile(key.bits, reps)[offset : offset + length].astype(bool)


def split_stream(x, key: CommonKey, offset: int = 0) -> GroupStreams:
    """Route bit x[i] to group1 iff the key bit at position offset+i is 1."""
    x = np.asarray(x, dtype=np.uint8)
    mask = _key_mask(key, len(x), offset)
    return GroupStreams(group1=x[mask], group2=x[~mask], offset=offset)


def merge_stream(groups: GroupStreams, key: CommonKey) -> np.ndarray:
    """Invert split_stream exactly; inconsistent lengths raise FramingError."""
    total = groups.consumed
    mask = _key_mask(key, total, groups.offset)
    need1 = int(mask.sum())
    if need1 != len(groups.group1):
        raise FramingError(
            f"group1 holds {len(groups.group1)} bits but the key pattern needs {need1}"
        )
    out = np.empty(total, dtype=np.uint8)
    out[mask] = groups.group1
    out[~mask] = groups.group2
    return out


def block_fits_key_period(key_length: int, balance_limit: float, m: int, k: int) -> bool:
    """True when any admissible key's larger group fits inside one m*k-bit block.

    The largest group an admissible key can produce per key period is
    length/2 + ceil(balance_limit * sigma) bits; requiring that to be at most
    m*k means a single block always consumes the full key.
    """
    sigma = math.sqrt(key_length / 4.0)
    return key_length / 2.0 + math.ceil(balance_limit * sigma) <= m * k
