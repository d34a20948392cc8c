import itertools
import math

import numpy as np
import pytest

from noisekey.grouping import CommonKey
from noisekey.oracle import (
    TinyScenario,
    admissible_keys,
    class_size_by_parity,
    enumerate_info_candidates,
    enumerate_key_candidates,
    enumerate_with_errors,
    judge_candidate,
    make_scenario,
    partition_by_parity,
    _first_block_symbols,
)
from noisekey.rs import bits_to_symbols, encode_parity, make_code
from noisekey.session import _completed_blocks
from noisekey.channel import bsc_transmit
from noisekey.gf import build_field


def brute_admissible_count(length, limit):
    sigma = math.sqrt(length / 4.0)
    return sum(
        math.comb(length, ones)
        for ones in range(length + 1)
        if abs(ones - length / 2.0) <= limit * sigma
    )


def test_admissible_key_listing():
    keys = admissible_keys(12, 2.0)
    assert len(keys) == brute_admissible_count(12, 2.0) == 3938
    ones = keys.sum(axis=1)
    assert ones.min() >= 3 and ones.max() <= 9
    with pytest.raises(ValueError):
        admissible_keys(24, 2.0)


def test_info_candidates_tiny_code(code_3_2):
    seen = set()
    for parity in range(4):
        pre = enumerate_info_candidates(code_3_2, np.array([parity]))
        assert len(pre) == 4  # 2^(m(2k-n))
        for row in pre:
            assert int(encode_parity(code_3_2, row)[0]) == parity
            seen.add(tuple(row))
    assert len(seen) == 16  # the preimages partition the info space
    zero = enumerate_info_candidates(code_3_2, np.zeros(1, dtype=np.int64))
    assert any((row == 0).all() for row in zero)


def test_info_candidates_guard(code_255_167):
    with pytest.raises(ValueError):
        enumerate_info_candidates(code_255_167, np.zeros(88, dtype=np.int64))


def test_batch_parities_match_scalar(code_7_5):
    rng = np.random.default_rng(60)
    scenario, _ = make_scenario(code_7_5, 12, 2.0, rng)
    buckets = partition_by_parity(scenario)
    # spot-check a few keys through the one-key path
    for row in scenario.key_space[::500]:
        block = _first_block_symbols(code_7_5, scenario.x, row, 0)
        parity = encode_parity(code_7_5, block).tobytes()
        assert any(
            np.array_equal(row, cand) for cand in buckets[parity]
        )


def test_error_free_enumeration(code_7_5):
    rng = np.random.default_rng(61)
    scenario, true_key = make_scenario(code_7_5, 12, 2.0, rng)
    cands = enumerate_key_candidates(scenario)
    found = any(np.array_equal(r, true_key.bits) for r in cands.all_keys())
    assert found
    # partition: classes over all parity values sum to the key-set size
    sizes = class_size_by_parity(scenario)
    assert sizes.sum() == len(scenario.key_space)
    assert sizes.mean() == pytest.approx(len(scenario.key_space) / 2 ** code_7_5.parity_bits)


def test_average_class_size_matches_formula(code_3_2):
    rng = np.random.default_rng(62)
    keys = admissible_keys(12, 2.0)
    delta_exact = 1 - len(keys) / 2**12
    formula = 2 ** (12 - code_3_2.parity_bits) * (1 - delta_exact)
    for _ in range(20):
        x = rng.integers(0, 2, 12 * code_3_2.info_bits, dtype=np.uint8)
        scenario = TinyScenario(
            code=code_3_2, key_space=keys, x=x, parity=np.zeros(1, dtype=np.int64), balance_limit=2.0
        )
        sizes = class_size_by_parity(scenario)
        assert sizes.mean() == pytest.approx(formula, rel=1e-12)


def test_with_errors_reduces_and_disjoint(code_7_5):
    rng = np.random.default_rng(63)
    scenario, _ = make_scenario(code_7_5, 12, 2.0, rng, ber=0.05)
    plain = enumerate_with_errors(scenario, 0)
    assert plain.patterns == [(0,) * 5]
    cands = enumerate_with_errors(scenario, 1, "symbol")
    assert len(cands.patterns) == 1 + 5 * 7
    mats = [cands.per_pattern[p] for p in cands.patterns]
    tags = [set(map(bytes, (row.tobytes() for row in m))) for m in mats]
    for a, b in itertools.combinations(range(len(tags)), 2):
        assert not (tags[a] & tags[b])
    avg = len(scenario.key_space) / 2 ** code_7_5.parity_bits
    assert cands.total_candidates == pytest.approx(len(cands.patterns) * avg, rel=0.25)


def test_with_errors_weight_guard(code_7_5):
    rng = np.random.default_rng(64)
    scenario, _ = make_scenario(code_7_5, 12, 2.0, rng)
    with pytest.raises(ValueError):
        enumerate_with_errors(scenario, code_7_5.t + 1)


def test_bit_patterns_are_symbol_patterns(code_7_5):
    rng = np.random.default_rng(65)
    scenario, _ = make_scenario(code_7_5, 12, 2.0, rng)
    cands = enumerate_with_errors(scenario, 1, "bit")
    assert len(cands.patterns) == 1 + code_7_5.info_bits
    for pattern in cands.patterns:
        weight = sum(1 for s in pattern if s)
        assert weight <= 1
        bitcount = sum(bin(s).count("1") for s in pattern)
        assert bitcount <= 1


def test_true_key_remains_under_noise(code_7_5):
    # with bit errors the true key moves to the sublist of the realized pattern
    rng = np.random.default_rng(66)
    scenario, true_key = make_scenario(code_7_5, 12, 2.0, rng, ber=0.01)
    cands = enumerate_with_errors(scenario, 1, "bit")
    assert any(np.array_equal(r, true_key.bits) for r in cands.all_keys())


def test_no_partial_key_derivation(code_7_5):
    # every key bit position is undetermined within the error-free candidate set
    rng = np.random.default_rng(67)
    scenario, _ = make_scenario(code_7_5, 12, 2.0, rng)
    keys = enumerate_key_candidates(scenario).all_keys()
    assert len(keys) > 1
    column_sums = keys.sum(axis=0)
    assert (column_sums > 0).all() and (column_sums < len(keys)).all()


def _judge_fixture(code, rng, p_bob, blocks=50, key_length=12):
    scenario_keys = admissible_keys(key_length, 2.0)
    true_row = scenario_keys[rng.integers(0, len(scenario_keys))]
    key = CommonKey.from_bits(true_row, 2.0, require_admissible=False)
    stream = rng.integers(0, 2, size=code.info_bits * blocks * 3, dtype=np.uint8)
    parity_frames = []
    for group, _idx, bits in _completed_blocks(stream, key, code.info_bits):
        parity_frames.append((group, encode_parity(code, bits_to_symbols(bits, code.m))))
        if len(parity_frames) >= blocks:
            break
    noisy = bsc_transmit(stream, p_bob, rng)
    return key, stream, noisy, parity_frames


def test_judge_accepts_true_key(code_7_5):
    rng = np.random.default_rng(68)
    p = 0.002
    key, _, noisy, parity_frames = _judge_fixture(code_7_5, rng, p)
    p_eff = 1 - (1 - p) ** code_7_5.m
    verdict = judge_candidate(key.bits, noisy, parity_frames, code_7_5, p_eff)
    assert verdict.consistent
    assert verdict.mean_errors <= verdict.threshold
    assert verdict.mean_errors == pytest.approx(code_7_5.k * p_eff, abs=4 * math.sqrt(code_7_5.k * p_eff / 50))


def test_judge_rejects_wrong_key(code_7_5):
    rng = np.random.default_rng(69)
    key, _, noisy, parity_frames = _judge_fixture(code_7_5, rng, 0.002)
    wrong = key.bits.copy()
    wrong = np.roll(wrong, 3)
    assert not np.array_equal(wrong, key.bits)
    p_eff = 1 - (1 - 0.002) ** code_7_5.m
    verdict = judge_candidate(wrong, noisy, parity_frames, code_7_5, p_eff)
    assert not verdict.consistent
    assert verdict.decode_failures > 0


def test_judge_zero_noise_zero_histogram(code_7_5):
    rng = np.random.default_rng(70)
    key, stream, _, parity_frames = _judge_fixture(code_7_5, rng, 0.0)
    verdict = judge_candidate(key.bits, stream, parity_frames, code_7_5, 0.01)
    assert verdict.consistent
    assert all(e == 0 for e in verdict.per_block_errors)


def test_scenario_guard():
    # ~1e6 keys x ~7.8e3 bit patterns blows the work budget before any
    # enumeration starts
    fld = build_field(4, 0x13)
    code = make_code(fld, 15, 9)
    keys = admissible_keys(20, 3.5)
    scenario = TinyScenario(
        code=code,
        key_space=keys,
        x=np.zeros(code.info_bits, dtype=np.uint8),
        parity=np.zeros(6, dtype=np.int64),
    )
    with pytest.raises(ValueError):
        enumerate_with_errors(scenario, 3, "bit")


def test_candidate_narrowing_to_true_key(code_7_5):
    # the full loop: list candidates from one block's parity, then test each
    # against the remaining traffic until a single key survives
    rng = np.random.default_rng(71)
    keys = admissible_keys(12, 2.0)
    true_row = keys[rng.integers(0, len(keys))]
    key = CommonKey.from_bits(true_row, 2.0, require_admissible=False)
    stream = rng.integers(0, 2, size=code_7_5.info_bits * 60, dtype=np.uint8)
    parity_frames = []
    first_parity = None
    for group, index, bits in _completed_blocks(stream, key, code_7_5.info_bits):
        parity = encode_parity(code_7_5, bits_to_symbols(bits, code_7_5.m))
        parity_frames.append((group, parity))
        if group == 1 and index == 0:
            first_parity = parity
    scenario = TinyScenario(
        code=code_7_5, key_space=keys, x=stream, parity=first_parity, balance_limit=2.0
    )
    candidates = enumerate_key_candidates(scenario).all_keys()
    assert len(candidates) > 1
    survivors = [
        row
        for row in candidates
        if judge_candidate(row, stream, parity_frames, code_7_5, 0.01).consistent
    ]
    assert len(survivors) == 1
    assert np.array_equal(survivors[0], true_row)
