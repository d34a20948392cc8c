import math

import numpy as np
import pytest

from noisekey.channel import ChannelConfig, Frame, KIND_INFO, KIND_PARITY
from noisekey.grouping import CommonKey, sample_key, split_stream
from noisekey.rs import bits_to_symbols, encode_parity, make_code
from noisekey.gf import build_field
from noisekey.session import (
    SessionConfig,
    run_receiver,
    run_session,
    run_transmitter,
    xor_pad,
)

EVE_BER = 1.0 - 0.9 ** 0.125


@pytest.fixture(scope="module")
def toy_code():
    return make_code(build_field(5, 0x25), 31, 19)


@pytest.fixture(scope="module")
def toy_key():
    return sample_key(160, 2.0, np.random.default_rng(80))


def toy_config(toy_code, toy_key, blocks=40, ber=0.016, method=1, seed=5, **kw):
    channel = ChannelConfig(eve_ber=ber, bob_ber=kw.pop("bob_ber", ber), method=method, seed=seed)
    return SessionConfig(
        key=toy_key,
        code=toy_code,
        channel=channel,
        blocks_target=blocks,
        unit_blocks=kw.pop("unit_blocks", 1),
        fluctuation_sigmas=kw.pop("fluctuation_sigmas", 0.5),
        safety_bits=kw.pop("safety_bits", 1),
        source_seed=kw.pop("source_seed", 11),
        hash_seed=kw.pop("hash_seed", 12),
        **kw,
    )


def test_config_rejects_inadmissible_key(toy_code):
    bad = CommonKey.from_bits(np.zeros(160, dtype=np.uint8), 2.0, require_admissible=False)
    with pytest.raises(ValueError):
        toy_config(toy_code, bad)


def test_config_enforces_key_period_gate(toy_code):
    # a 256-bit key cannot be consumed by one 95-bit block
    key = sample_key(256, 2.0, np.random.default_rng(81))
    with pytest.raises(ValueError):
        toy_config(toy_code, key)


def test_config_enforces_rate_gate(toy_code, toy_key):
    with pytest.raises(ValueError):
        toy_config(toy_code, toy_key, key_bits=1000)


def test_one_unit_one_key(toy_code, toy_key):
    cfg = toy_config(toy_code, toy_key, blocks=1)
    tx = run_transmitter(cfg)
    assert len(tx.keys) == 1
    assert len([f for f in tx.frames if f.kind == KIND_PARITY]) == 1
    assert len(tx.keys[0]) == cfg.key_bits


def test_transmitter_deterministic(toy_code, toy_key):
    cfg = toy_config(toy_code, toy_key, blocks=20)
    a = run_transmitter(cfg)
    b = run_transmitter(cfg)
    assert len(a.frames) == len(b.frames)
    assert all(fa == fb for fa, fb in zip(a.frames, b.frames))
    assert all(np.array_equal(ka, kb) for ka, kb in zip(a.keys, b.keys))


def test_parity_frames_recomputable_from_capture(toy_code, toy_key):
    # an observer holding the frames and the key can re-derive every parity
    cfg = toy_config(toy_code, toy_key, blocks=100)
    tx = run_transmitter(cfg)
    stream = np.concatenate([f.payload for f in tx.frames if f.kind == KIND_INFO])
    groups = split_stream(stream, toy_key)
    per_group = {1: groups.group1, 2: groups.group2}
    nb = toy_code.info_bits
    for frame in tx.frames:
        if frame.kind != KIND_PARITY:
            continue
        block = per_group[frame.group][frame.index * nb : (frame.index + 1) * nb]
        parity = encode_parity(toy_code, bits_to_symbols(block, toy_code.m))
        assert (bits_to_symbols(frame.payload, toy_code.m) == parity).all()


def test_receiver_on_clean_frames_reproduces_keys(toy_code, toy_key):
    cfg = toy_config(toy_code, toy_key, blocks=30)
    tx = run_transmitter(cfg)
    rx = run_receiver(tx.frames, cfg)
    assert len(rx.keys) == len(tx.keys)
    assert all(kb is not None and np.array_equal(ka, kb) for ka, kb in zip(tx.keys, rx.keys))
    assert all(outcome.ok and outcome.corrected == 0 for outcome in rx.outcomes)


def test_corrupted_block_poisons_only_its_unit(toy_code, toy_key):
    cfg = toy_config(toy_code, toy_key, blocks=10)
    tx = run_transmitter(cfg)
    frames = list(tx.frames)
    parity_positions = [i for i, f in enumerate(frames) if f.kind == KIND_PARITY]
    target = parity_positions[3]
    payload = frames[target].payload.copy()
    for sym in range(toy_code.t + 2):  # unrecoverable damage to one block
        payload[sym * toy_code.m] ^= 1
    frames[target] = Frame(
        method=frames[target].method,
        group=frames[target].group,
        index=frames[target].index,
        kind=frames[target].kind,
        payload=payload,
    )
    rx = run_receiver(frames, cfg)
    assert rx.keys[3] is None
    assert sum(1 for o in rx.outcomes if not o.ok) == 1
    for j, (ka, kb) in enumerate(zip(tx.keys, rx.keys)):
        if j != 3:
            assert kb is not None and np.array_equal(ka, kb)


def test_out_of_order_frames_rejected(toy_code, toy_key):
    cfg = toy_config(toy_code, toy_key, blocks=5)
    tx = run_transmitter(cfg)
    frames = list(tx.frames)
    infos = [i for i, f in enumerate(frames) if f.kind == KIND_INFO]
    frames[infos[0]], frames[infos[1]] = frames[infos[1]], frames[infos[0]]
    with pytest.raises(ValueError):
        run_receiver(frames, cfg)


def test_empty_session(toy_code, toy_key):
    report = run_session(toy_config(toy_code, toy_key, blocks=0))
    assert report.blocks_completed == 0
    assert report.keys_alice == [] and report.keys_bob == []
    assert report.agreement_rate is None


def test_session_report_round_trip(toy_code, toy_key):
    report = run_session(toy_config(toy_code, toy_key, blocks=12))
    doc = report.to_dict()
    assert doc["blocks_completed"] == 12
    assert len(doc["keys_alice"]) == doc["units_completed"]
    assert doc["agreement_rate"] == report.agreement_rate


def test_method1_tap_sees_exact_parity(toy_code, toy_key):
    report = run_session(toy_config(toy_code, toy_key, blocks=20, method=1))
    tx = run_transmitter(toy_config(toy_code, toy_key, blocks=20, method=1))
    sent = {(f.group, f.index): f.payload for f in tx.frames if f.kind == KIND_PARITY}
    seen = [f for f in report.eve_capture if f.kind == KIND_PARITY]
    assert len(seen) == 20
    assert all((sent[(f.group, f.index)] == f.payload).all() for f in seen)


def test_method2_tap_parity_noisy(toy_code, toy_key):
    cfg = toy_config(toy_code, toy_key, blocks=300, method=2, ber=0.03)
    tx = run_transmitter(cfg)
    report = run_session(cfg)
    sent = {(f.group, f.index): f.payload for f in tx.frames if f.kind == KIND_PARITY}
    flips = total = 0
    for f in report.eve_capture:
        if f.kind != KIND_PARITY:
            continue
        flips += int((sent[(f.group, f.index)] ^ f.payload).sum())
        total += len(f.payload)
    rate = flips / total
    assert abs(rate - 0.03) <= 4 * math.sqrt(0.03 * 0.97 / total)


def test_eve_no_worse_than_bob(toy_code, toy_key):
    cfg = toy_config(toy_code, toy_key, blocks=200, ber=0.014, bob_ber=0.03)
    tx = run_transmitter(cfg)
    report = run_session(cfg)
    eve_stream = np.concatenate([f.payload for f in report.eve_capture if f.kind == KIND_INFO])
    eve_rate = (tx.stream ^ eve_stream).mean()
    n = len(tx.stream)
    assert abs(eve_rate - 0.014) <= 4 * math.sqrt(0.014 * 0.986 / n)
    assert eve_rate < 0.03
    bob_corrected_bits = sum(o.corrected for o in report.bob_outcomes) * toy_code.m
    assert sum(report.eve_block_flips) < bob_corrected_bits  # tap is cleaner than the receiver


def test_source_stream_looks_uniform(toy_code, toy_key):
    tx = run_transmitter(toy_config(toy_code, toy_key, blocks=200))
    bits = tx.stream
    n = len(bits)
    ones = int(bits.sum())
    z_freq = (ones - n / 2) / math.sqrt(n / 4)
    assert abs(z_freq) <= 4
    runs = 1 + int((bits[1:] != bits[:-1]).sum())
    n0 = n - ones
    expected = 1 + 2 * ones * n0 / n
    variance = (expected - 1) * (expected - 2) / (n - 1)
    assert abs(runs - expected) <= 4 * math.sqrt(variance)


def test_reference_scale_round_trip(code_255_167):
    # 1000 hashing units at the reference operating point: the decode-failure
    # budget is ~5e-10 per unit, so every key must agree.
    key = sample_key(2496, 3.5, np.random.default_rng(82))
    channel = ChannelConfig(eve_ber=EVE_BER, bob_ber=EVE_BER, method=1, seed=83)
    cfg = SessionConfig(
        key=key,
        code=code_255_167,
        channel=channel,
        blocks_target=1000,
        unit_blocks=1,
        fluctuation_sigmas=3.0,
        safety_bits=10,
        source_seed=84,
        hash_seed=85,
    )
    assert cfg.key_bits == 12
    report = run_session(cfg)
    assert report.units_completed == 1000
    assert report.agreement_rate == 1.0
    assert all(o.ok for o in report.bob_outcomes)
    mean_corrected = np.mean([o.corrected for o in report.bob_outcomes])
    assert mean_corrected == pytest.approx(167 * 0.1, rel=0.05)


def test_multi_block_units(toy_code, toy_key):
    cfg = toy_config(toy_code, toy_key, blocks=21, unit_blocks=5, fluctuation_sigmas=0.5)
    report = run_session(cfg)
    assert report.units_completed == 4  # 21 blocks -> 4 full units, remainder dropped
    assert len(report.keys_alice[0]) == cfg.key_bits


def test_xor_pad_round_trip():
    rng = np.random.default_rng(86)
    msg = rng.integers(0, 2, 64, dtype=np.uint8)
    pad = rng.integers(0, 2, 64, dtype=np.uint8)
    assert (xor_pad(xor_pad(msg, pad), pad) == msg).all()
    with pytest.raises(ValueError):
        xor_pad(msg, pad[:-1])
