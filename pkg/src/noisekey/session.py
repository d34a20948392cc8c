"""End-to-end protocol runs: transmitter, channel, receiver, eavesdropper tap.

The transmitter draws a random bit stream, sends it in fixed-size payload
frames, routes a private copy into two groups with the shared key, and
publishes one parity frame per completed block. Secret keys fall out of
hashing `unit_blocks` consecutive blocks (wire completion order, group I
checked before group II within a chunk). The receiver regroups its noisy
copy with the same key, error-corrects each block against the published
parity, and hashes the corrected bits; a unit with any failed block yields
no key rather than a partial one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .amplify import CapacityParams, HashSeed, capacity_lower_bound, extract_key
from .channel import (
    ChannelConfig,
    Frame,
    GROUP_NONE,
    KIND_INFO,
    KIND_PARITY,
    deliver,
)
from .grouping import CommonKey, FramingError, _key_mask, block_fits_key_period
from .rs import CodeSpec, bits_to_symbols, decode_block, encode_parity, symbols_to_bits

_SOURCE_STREAM = 7


@dataclass(frozen=True, eq=False)
class SessionConfig:
    key: CommonKey
    code: CodeSpec
    channel: ChannelConfig
    blocks_target: int
    unit_blocks: int = 1
    fluctuation_sigmas: float = 3.0
    safety_bits: int = 10
    key_bits: int | None = None     # defaults to the largest rate-safe size
    source_seed: int = 0
    hash_seed: int = 0

    def __post_init__(self):
        if not self.key.admissible:
            raise ValueError("session key falls outside the admissible set")
        if not block_fits_key_period(
            self.key.length, self.key.balance_limit, self.code.m, self.code.k
        ):
            raise ValueError(
                "one block does not span a full key period; enlarge the block "
                "or shorten the key"
            )
        if self.blocks_target < 0:
            raise ValueError("blocks_target must be >= 0")
        bound = capacity_lower_bound(self.capacity_params)
        if self.key_bits is None:
            object.__setattr__(self, "key_bits", bound.key_bits_max)
        if self.key_bits > bound.key_bits_max:
            raise ValueError(
                f"{self.key_bits} key bits per unit exceeds the rate bound "
                f"({bound.key_bits_max})"
            )
        if self.key_bits < 1:
            raise ValueError("no secure key bits available at these parameters")

    @property
    def capacity_params(self) -> CapacityParams:
        return CapacityParams(
            code=self.code,
            eve_ber=self.channel.eve_ber,
            unit_blocks=self.unit_blocks,
            fluctuation_sigmas=self.fluctuation_sigmas,
            safety_bits=self.safety_bits,
        )


@dataclass(frozen=True)
class BlockRecord:
    group: int
    index: int          # per-group ordinal
    wire_order: int     # completion order across both groups
    info_bits: np.ndarray
    info: np.ndarray
    parity: np.ndarray


@dataclass(frozen=True)
class BlockOutcome:
    group: int
    index: int
    ok: bool
    corrected: int


@dataclass(frozen=True, eq=False)
class TransmitterRun:
    frames: list
    keys: list
    blocks: list
    stream: np.ndarray


@dataclass(frozen=True, eq=False)
class ReceiverRun:
    keys: list          # one entry per unit; None marks a failed unit
    outcomes: list


@dataclass(frozen=True, eq=False)
class SessionReport:
    keys_alice: list
    keys_bob: list
    agreement_rate: float | None
    bob_outcomes: list
    eve_block_flips: list
    eve_capture: list
    blocks_completed: int
    units_completed: int

    def to_dict(self) -> dict:
        def hexkey(bits):
            if bits is None:
                return None
            return "".join(str(int(b)) for b in bits)

        return {
            "keys_alice": [hexkey(k) for k in self.keys_alice],
            "keys_bob": [hexkey(k) for k in self.keys_bob],
            "agreement_rate": self.agreement_rate,
            "bob_blocks": [
                {"group": o.group, "index": o.index, "ok": o.ok, "corrected": o.corrected}
                for o in self.bob_outcomes
            ],
            "eve_block_flips": list(map(int, self.eve_block_flips)),
            "blocks_completed": self.blocks_completed,
            "units_completed": self.units_completed,
        }


def _completed_blocks(stream: np.ndarray, key: CommonKey, block_bits: int):
    """Yield (group, per-group index, routed bits) in wire completion order.

    Completion is checked at payload-chunk boundaries, group I before
    group II, which both ends reproduce independently of bit values.
    """
    mask = _key_mask(key, len(stream), 0)
    routed = {1: stream[mask], 2: stream[~mask]}
    prefix_ones = np.cumsum(mask)
    done = {1: 0, 2: 0}
    for chunk_end in range(block_bits, len(stream) + 1, block_bits):
        have = {1: int(prefix_ones[chunk_end - 1])}
        have[2] = chunk_end - have[1]
        for group in (1, 2):
            while (done[group] + 1) * block_bits <= have[group]:
                j = done[group]
                yield group, j, routed[group][j * block_bits : (j + 1) * block_bits]
                done[group] += 1


def _unit_key(config: SessionConfig, unit_index: int, unit_bits: np.ndarray) -> np.ndarray:
    seed = HashSeed.of(config.hash_seed, unit_index)
    return extract_key(unit_bits, config.key_bits, seed)


def run_transmitter(config: SessionConfig) -> TransmitterRun:
    """Produce the frame stream and the transmitter-side secret keys."""
    code = config.code
    block_bits = code.info_bits
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=config.source_seed, spawn_key=(_SOURCE_STREAM,))
    )
    frames: list[Frame] = []
    blocks: list[BlockRecord] = []
    chunks: list[np.ndarray] = []
    if config.blocks_target == 0:
        return TransmitterRun(frames=[], keys=[], blocks=[], stream=np.zeros(0, dtype=np.uint8))

    # Generate chunk by chunk until enough blocks complete. The block former
    # is re-run over the growing stream only at the end to keep one shared
    # code path with the receiver; per-chunk bookkeeping tracks completions.
    routed_bits = {1: 0, 2: 0}
    chunk_idx = 0
    while routed_bits[1] // block_bits + routed_bits[2] // block_bits < config.blocks_target:
        chunk = rng.integers(0, 2, size=block_bits, dtype=np.uint8)
        chunks.append(chunk)
        frames.append(
            Frame(
                method=config.channel.method,
                group=GROUP_NONE,
                index=chunk_idx,
                kind=KIND_INFO,
                payload=chunk,
            )
        )
        ones = int(_key_mask(config.key, block_bits, chunk_idx * block_bits).sum())
        routed_bits[1] += ones
        routed_bits[2] += block_bits - ones
        chunk_idx += 1

    stream = np.concatenate(chunks)
    parity_counter = 0
    for group, index, bits in _completed_blocks(stream, config.key, block_bits):
        if parity_counter >= config.blocks_target:
            break
        info = bits_to_symbols(bits, code.m)
        parity = encode_parity(code, info)
        frames.append(
            Frame(
                method=config.channel.method,
                group=group,
                index=index,
                kind=KIND_PARITY,
                payload=symbols_to_bits(parity, code.m),
            )
        )
        blocks.append(
            BlockRecord(
                group=group,
                index=index,
                wire_order=parity_counter,
                info_bits=bits,
                info=info,
                parity=parity,
            )
        )
        parity_counter += 1

    keys = []
    for unit in range(len(blocks) // config.unit_blocks):
        members = blocks[unit * config.unit_blocks : (unit + 1) * config.unit_blocks]
        unit_bits = np.concatenate([b.info_bits for b in members])
        keys.append(_unit_key(config, unit, unit_bits))
    return TransmitterRun(frames=frames, keys=keys, blocks=blocks, stream=stream)


def run_receiver(frames, config: SessionConfig) -> ReceiverRun:
    """Regroup, decode, and hash the delivered frames into secret keys."""
    code = config.code
    block_bits = code.info_bits
    info_frames = [f for f in frames if f.kind == KIND_INFO]
    parities = {(f.group, f.index): f for f in frames if f.kind == KIND_PARITY}
    for pos, frame in enumerate(info_frames):
        if frame.index != pos:
            raise FramingError(f"payload frame {frame.index} arrived at position {pos}")
        if len(frame.payload) != block_bits:
            raise FramingError(
                f"payload frame {frame.index} carries {len(frame.payload)} bits, expected {block_bits}"
            )
    if not info_frames:
        return ReceiverRun(keys=[], outcomes=[])
    stream = np.concatenate([f.payload for f in info_frames])

    outcomes: list[BlockOutcome] = []
    corrected_bits: list[np.ndarray | None] = []
    for group, index, bits in _completed_blocks(stream, config.key, block_bits):
        frame = parities.get((group, index))
        if frame is None:
            break
        info = bits_to_symbols(bits, code.m)
        parity = bits_to_symbols(frame.payload, code.m)
        result = decode_block(code, np.concatenate([info, parity]))
        outcomes.append(
            BlockOutcome(group=group, index=index, ok=result.ok, corrected=result.corrected)
        )
        corrected_bits.append(symbols_to_bits(result.info, code.m) if result.ok else None)

    keys: list[np.ndarray | None] = []
    for unit in range(len(corrected_bits) // config.unit_blocks):
        members = corrected_bits[unit * config.unit_blocks : (unit + 1) * config.unit_blocks]
        if any(m is None for m in members):
            keys.append(None)
            continue
        unit_bits = np.concatenate(members)
        keys.append(_unit_key(config, unit, unit_bits))
    return ReceiverRun(keys=keys, outcomes=outcomes)


def run_session(config: SessionConfig) -> SessionReport:
    """Wire transmitter -> channel -> receiver, with the tap capturing at its own rate."""
    tx = run_transmitter(config)
    bob_frames = [deliver(f, config.channel, "bob") for f in tx.frames]
    eve_frames = [deliver(f, config.channel, "eve") for f in tx.frames]
    rx = run_receiver(bob_frames, config)

    eve_stream = np.concatenate(
        [f.payload for f in eve_frames if f.kind == KIND_INFO]
    ) if eve_frames else np.zeros(0, dtype=np.uint8)
    flip_indicator = tx.stream ^ eve_stream
    eve_flips = []
    for (_, _, bits), _record in zip(
        _completed_blocks(flip_indicator, config.key, config.code.info_bits), tx.blocks
    ):
        eve_flips.append(int(bits.sum()))

    matches = sum(
        1
        for ka, kb in zip(tx.keys, rx.keys)
        if kb is not None and np.array_equal(ka, kb)
    )
    units = len(tx.keys)
    return SessionReport(
        keys_alice=tx.keys,
        keys_bob=rx.keys,
        agreement_rate=(matches / units) if units else None,
        bob_outcomes=rx.outcomes,
        eve_block_flips=eve_flips,
        eve_capture=eve_frames,
        blocks_completed=len(tx.blocks),
        units_completed=units,
    )


def xor_pad(message_bits, key_bits) -> np.ndarray:
    """One-time-pad a message with a generated key (demo helper)."""
    message_bits = np.asarray(message_bits, dtype=np.uint8)
    key_bits = np.asarray(key_bits, dtype=np.uint8)
    if len(message_bits) != len(key_bits):
        raise ValueError("pad length must equal message length")
    return message_bits ^ key_bits
