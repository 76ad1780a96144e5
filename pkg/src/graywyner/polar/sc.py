"""Batched successive-cancellation traversal.

One engine serves construction, lossless coding and lossy coding.  It walks
the polarization recursion over a batch of blocks, carrying one or two
evidence chains side by side:

* chain 0 conditions on the observed side information,
* an optional chain 1 conditions on nothing (the prior chain), used when the
  coded variable has a nonuniform prior and some decisions must be
  reproducible from the prior alone.

Both chains always receive the same decided bits, so their per-position
posteriors stay aligned.  All chain arithmetic is elementwise per chain;
running the prior chain alone therefore reproduces bit-for-bit the values it
takes inside a two-chain traversal, which is what lets an encoder (two
chains) and a decoder (prior chain only) agree exactly on deterministic
decisions.

Evidence enters as normalized per-position posteriors (chains, blocks, N, 2)
and the recursion renormalizes after every combine, so probabilities never
drift toward underflow.  The split at a node of width M pairs position j of
the first half with position j of the second half: the first recursive call
decodes the transform of (first xor second), the second decodes the
transform of the second half given that xor.
"""

from __future__ import annotations

import numpy as np


def _normalize_pairs(p0: np.ndarray, p1: np.ndarray) -> np.ndarray:
    """Stack two nonnegative parts into normalized (..., 2) posteriors.

    Positions where both parts vanish (possible only through contradictory
    evidence) fall back to the uninformative pair (1/2, 1/2).
    """
    out = np.stack([p0, p1], axis=-1)
    s = out.sum(axis=-1, keepdims=True)
    bad = s == 0.0
    if np.any(bad):
        out = np.where(bad, 0.5, out / np.where(bad, 1.0, s))
    else:
        out /= s
    return out


def sc_traverse(evidence: np.ndarray, decide):
    """Run one successive-cancellation pass over a batch of blocks.

    evidence: (chains, blocks, N, 2) normalized leaf posteriors, N a power
        of two.
    decide: callback ``decide(i, posteriors) -> bits`` called once per leaf
        index i in increasing order; posteriors has shape (chains, blocks, 2)
        and bits must be a (blocks,) array over {0, 1}.  The returned bits
        are fed back into every chain.

    Returns (u, x), both (blocks, N) uint8, where u collects the decided
    bits in leaf order and x is the corresponding codeword (u equals the
    polarization transform of x by construction).
    """
    if evidence.ndim != 4 or evidence.shape[-1] != 2:
        raise ValueError(f"evidence must have shape (C, B, N, 2), got {evidence.shape}")
    n_chains, n_blocks, block_len, _ = evidence.shape
    if block_len < 1 or (block_len & (block_len - 1)) != 0:
        raise ValueError(f"block length must be a power of two, got {block_len}")
    u_out = np.empty((n_blocks, block_len), dtype=np.uint8)
    cursor = [0]

    def rec(ev: np.ndarray) -> np.ndarray:
        width = ev.shape[2]
        if width == 1:
            i = cursor[0]
            cursor[0] += 1
            bits = np.asarray(decide(i, ev[:, :, 0, :]), dtype=np.uint8)
            u_out[:, i] = bits
            return bits[:, None]
        half = width // 2
        first, second = ev[:, :, :half, :], ev[:, :, half:, :]
        a0, a1 = first[..., 0], first[..., 1]
        b0, b1 = second[..., 0], second[..., 1]
        xor_ev = _normalize_pairs(a0 * b0 + a1 * b1, a0 * b1 + a1 * b0)
        v = rec(xor_ev)  # bits of (first-half xor second-half)
        known = v[None, :, :].astype(bool)
        sel0 = np.where(known, a1, a0)  # P(first = v xor 0)
        sel1 = np.where(known, a0, a1)  # P(first = v xor 1)
        tail_ev = _normalize_pairs(sel0 * b0, sel1 * b1)
        tail = rec(tail_ev)
        return np.concatenate([v ^ tail, tail], axis=1)

    x_out = rec(np.asarray(evidence, dtype=float))
    return u_out, x_out


def chunked_batches(n_blocks: int, n_chains: int, block_len: int,
                    budget: int = 1 << 23):
    """Yield (start, stop) batch slices keeping chains*blocks*N under budget.

    Keeps the transient memory of a traversal bounded while letting large
    batches share the fixed per-traversal overhead.
    """
    per_block = max(1, n_chains * block_len)
    chunk = max(1, budget // per_block)
    for start in range(0, n_blocks, chunk):
        yield start, min(start + chunk, n_blocks)
