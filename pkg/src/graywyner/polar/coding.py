"""Lossless and lossy source coding on top of the traversal engine.

Lossless mode stores the bits at the least predictable indices verbatim and
recovers the rest by maximum-posterior decisions; the encoder runs the same
decisions and records the positions where they disagree with the truth, so
decoding is exact by construction.  The per-block rate charges each recorded
correction log2(N) + 1 bits (index plus flag) on top of the stored set.

Lossy mode emits the payload bits at the INFO indices.  Frozen-random
indices take shared dither bits addressed by (shared seed, level, block),
identical on both sides without communication and independent of batch
size.  Frozen-deterministic indices (present only for nonuniform priors)
are replayed from the prior chain, whose arithmetic is elementwise and so
bit-identical between the encoder's two-chain pass and the decoder's
single-chain pass.  INFO decisions use randomized rounding on the
observation-conditioned posterior.  The reconstruction is the codeword of
the decided bit vector; when the profile has no deterministic indices the
decoder skips the traversal entirely and just transforms the assembled bit
vector, which equals the traversal output exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import rng
from .channel import BinarySourceWithSideInfo
from .profile import CLASS_FROZEN_DETERMINISTIC, CLASS_FROZEN_RANDOM, CLASS_INFO, PolarProfile
from .sc import chunked_batches, sc_traverse
from .transform import polar_transform


def _check_pairing(channel: BinarySourceWithSideInfo, profile: PolarProfile) -> None:
    if channel.channel_id() != profile.channel_id:
        raise ValueError(
            f"profile was constructed for channel {profile.channel_id}, "
            f"got {channel.channel_id()} ({channel.name})")


def _side_symbols(channel, side, shape):
    if side is None:
        if channel.side_alphabet_size != 1:
            raise ValueError("channel has side information; pass the side array")
        return np.zeros(shape, dtype=np.intp)
    side = np.asarray(side)
    if side.shape != shape:
        raise ValueError(f"side must have shape {shape}, got {side.shape}")
    return side.astype(np.intp)


# ---------------------------------------------------------------------------
# lossless
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LosslessCode:
    """Compressed representation of a batch of blocks.

    stored_mask: (N,) bool, the stored index set.
    stored_bits: (B, |stored|) uint8, bits at the stored indices per block.
    corrections: tuple of per-block int arrays, leaf indices whose
        maximum-posterior decision must be flipped during decoding.
    """

    stored_mask: np.ndarray
    stored_bits: np.ndarray
    corrections: tuple

    @property
    def n_blocks(self) -> int:
        return self.stored_bits.shape[0]

    def rate_per_block(self, block_len: int) -> np.ndarray:
        """Bits per source symbol for each block, corrections charged
        log2(N) + 1 bits apiece."""
        stored = int(self.stored_mask.sum())
        per_fix = np.log2(block_len) + 1.0
        fixes = np.array([len(t) for t in self.corrections], dtype=float)
        return (stored + fixes * per_fix) / block_len

    def mean_rate(self, block_len: int) -> float:
        return float(self.rate_per_block(block_len).mean())


def sc_lossless_encode(x: np.ndarray, channel: BinarySourceWithSideInfo,
                       profile: PolarProfile, stored_fraction: float,
                       side=None) -> LosslessCode:
    """Compress blocks x (B, N) of the channel's coded variable."""
    _check_pairing(channel, profile)
    x = np.asarray(x, dtype=np.uint8)
    n_blocks, block_len = x.shape
    if block_len != profile.block_len:
        raise ValueError(f"blocks have length {block_len}, profile expects {profile.block_len}")
    side = _side_symbols(channel, side, x.shape)
    u_true = polar_transform(x)
    mask = profile.stored_mask(stored_fraction)
    corrections = [[] for _ in range(n_blocks)]
    for start, stop in chunked_batches(n_blocks, 1, block_len):
        evidence = channel.leaf_evidence(side[start:stop])[None]
        chunk_u = u_true[start:stop]

        def decide(i, probs, chunk_u=chunk_u, start=start):
            true_bits = chunk_u[:, i]
            if mask[i]:
                return true_bits
            guess = (probs[0, :, 1] > probs[0, :, 0]).astype(np.uint8)
            for b in np.flatnonzero(guess != true_bits):
                corrections[start + b].append(i)
            return true_bits

        sc_traverse(evidence, decide)
    return LosslessCode(
        stored_mask=mask, stored_bits=u_true[:, mask],
        corrections=tuple(np.array(sorted(t), dtype=np.int64) for t in corrections))


def sc_lossless_decode(code: LosslessCode, channel: BinarySourceWithSideInfo,
                       profile: PolarProfile, side=None) -> np.ndarray:
    """Recover the source blocks exactly from their compressed form."""
    _check_pairing(channel, profile)
    n_blocks = code.n_blocks
    block_len = profile.block_len
    side = _side_symbols(channel, side, (n_blocks, block_len))
    column = np.cumsum(code.stored_mask) - 1
    flip = np.zeros((n_blocks, block_len), dtype=bool)
    for b, idx in enumerate(code.corrections):
        flip[b, idx] = True
    out = np.empty((n_blocks, block_len), dtype=np.uint8)
    for start, stop in chunked_batches(n_blocks, 1, block_len):
        evidence = channel.leaf_evidence(side[start:stop])[None]

        def decide(i, probs, start=start, stop=stop):
            if code.stored_mask[i]:
                return code.stored_bits[start:stop, column[i]]
            guess = (probs[0, :, 1] > probs[0, :, 0]).astype(np.uint8)
            return guess ^ flip[start:stop, i]

        _, x_hat = sc_traverse(evidence, decide)
        out[start:stop] = x_hat
    return out


# ---------------------------------------------------------------------------
# lossy
# ---------------------------------------------------------------------------

def _dither_matrix(shared_seed, level, n_blocks, block_offset, block_len):
    stream_id = rng.substream(rng.STREAM_DITHER, level)
    rows = [rng.block_bits(shared_seed, stream_id, block_offset + b, block_len)
            for b in range(n_blocks)]
    return np.stack(rows)


def _rounding_matrix(shared_seed, level, n_blocks, block_offset, block_len):
    stream_id = rng.substream(rng.STREAM_ROUNDING, level)
    rows = [rng.block_uniforms(shared_seed, stream_id, block_offset + b, block_len)
            for b in range(n_blocks)]
    return np.stack(rows)


def sc_lossy_encode(obs: np.ndarray, channel: BinarySourceWithSideInfo,
                    profile: PolarProfile, shared_seed: int,
                    block_offset: int = 0, level: int = 0):
    """Quantize observation blocks; returns (payload, reconstruction).

    obs: (B, N) side-information symbols (the thing being compressed).
    payload: (B, |INFO|) uint8 bits at the INFO indices.
    reconstruction: (B, N) coded-variable blocks, identical to what
        sc_lossy_reconstruct produces from the payload.
    """
    _check_pairing(channel, profile)
    obs = np.asarray(obs, dtype=np.intp)
    n_blocks, block_len = obs.shape
    if block_len != profile.block_len:
        raise ValueError(f"blocks have length {block_len}, profile expects {profile.block_len}")
    classes = profile.classes
    dither = _dither_matrix(shared_seed, level, n_blocks, block_offset, block_len)
    uniforms = _rounding_matrix(shared_seed, level, n_blocks, block_offset, block_len)
    dual = profile.has_deterministic
    payload = np.empty((n_blocks, len(profile.info_positions())), dtype=np.uint8)
    reconstruction = np.empty((n_blocks, block_len), dtype=np.uint8)
    for start, stop in chunked_batches(n_blocks, 2 if dual else 1, block_len):
        cond_ev = channel.leaf_evidence(obs[start:stop])
        if dual:
            evidence = np.stack([cond_ev, channel.prior_evidence(cond_ev.shape[:-1])])
        else:
            evidence = cond_ev[None]

        def decide(i, probs, start=start, stop=stop):
            cls = classes[i]
            if cls == CLASS_INFO:
                return (uniforms[start:stop, i] < probs[0, :, 1]).astype(np.uint8)
            if cls == CLASS_FROZEN_RANDOM:
                return dither[start:stop, i]
            prior = probs[-1]  # prior chain: last row in either layout
            return (prior[:, 1] > prior[:, 0]).astype(np.uint8)

        u, x_hat = sc_traverse(evidence, decide)
        payload[start:stop] = u[:, classes == CLASS_INFO]
        reconstruction[start:stop] = x_hat
    return payload, reconstruction


def sc_lossy_reconstruct(payload: np.ndarray, channel: BinarySourceWithSideInfo,
                         profile: PolarProfile, shared_seed: int,
                         block_offset: int = 0, level: int = 0) -> np.ndarray:
    """Rebuild reconstruction blocks from payload bits and shared dither."""
    _check_pairing(channel, profile)
    payload = np.asarray(payload, dtype=np.uint8)
    n_blocks = payload.shape[0]
    block_len = profile.block_len
    classes = profile.classes
    info_pos = profile.info_positions()
    if payload.shape != (n_blocks, len(info_pos)):
        raise ValueError(f"payload must have shape (B, {len(info_pos)})")
    dither = _dither_matrix(shared_seed, level, n_blocks, block_offset, block_len)
    if not profile.has_deterministic:
        u = np.zeros((n_blocks, block_len), dtype=np.uint8)
        u[:, info_pos] = payload
        fr = classes == CLASS_FROZEN_RANDOM
        u[:, fr] = dither[:, fr]
        return polar_transform(u)
    column = np.full(block_len, -1, dtype=np.int64)
    column[info_pos] = np.arange(len(info_pos))
    out = np.empty((n_blocks, block_len), dtype=np.uint8)
    for start, stop in chunked_batches(n_blocks, 1, block_len):
        evidence = np.asarray(
            channel.prior_evidence((stop - start, block_len)))[None]

        def decide(i, probs, start=start, stop=stop):
            cls = classes[i]
            if cls == CLASS_INFO:
                return payload[start:stop, column[i]]
            if cls == CLASS_FROZEN_RANDOM:
                return dither[start:stop, i]
            return (probs[0, :, 1] > probs[0, :, 0]).astype(np.uint8)

        _, x_hat = sc_traverse(evidence, decide)
        out[start:stop] = x_hat
    return out
