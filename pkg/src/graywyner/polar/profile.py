"""Monte Carlo code construction and index classification.

Construction samples blocks from the joint source law, follows the true bit
path through the successive-cancellation recursion, and accumulates two
statistics per leaf index i and per chain:

* the Bhattacharyya proxy z[i], the mean of 2 sqrt(p0 p1) over samples,
  which is 0 for a perfectly decided bit and 1 for a perfectly uniform one;
* the entropy proxy h[i], the mean of -log2 p(true bit), whose sum over i
  telescopes to the exact block log-likelihood (chain rule), giving a sharp
  consistency check against closed-form entropies.

Indices are then classified against the threshold t = 2^(-N^beta), compared
in the log domain so tiny values never underflow:

* FROZEN_DETERMINISTIC  when z_prior <= t: the bit is pinned by its prefix
  alone, so encoder and decoder can both derive it (wins ties with the
  frozen-random rule);
* FROZEN_RANDOM when z_cond >= 1 - t (and not deterministic): the bit stays
  uniform even given the observation, so a shared dither bit replaces it;
* INFO otherwise: the payload positions.

When the coded variable has a uniform prior, every prefix-conditional law is
exactly uniform, so z_prior and h_prior are set to 1 without sampling and no
prior chain is run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .. import rng
from .._fileio import atomic_write_text
from .channel import BinarySourceWithSideInfo
from .sc import chunked_batches, sc_traverse
from .transform import polar_transform

CLASS_INFO = 0
CLASS_FROZEN_RANDOM = 1
CLASS_FROZEN_DETERMINISTIC = 2

PROFILE_CACHE_VERSION = 1


def below_log_threshold(values, threshold_exponent: float) -> np.ndarray:
    """Elementwise test v <= 2^(-threshold_exponent) without underflow.

    Nonpositive v compares True (it is below any positive threshold).
    """
    v = np.atleast_1d(np.asarray(values, dtype=float))
    out = np.zeros(v.shape, dtype=bool)
    pos = v > 0.0
    out[~pos] = True
    out[pos] = np.log2(v[pos]) <= -threshold_exponent
    return out


def classify_indices(z_cond: np.ndarray, z_prior: np.ndarray, block_len: int,
                     beta: float) -> np.ndarray:
    """Class labels (INFO / FROZEN_RANDOM / FROZEN_DETERMINISTIC) per index."""
    exponent = float(block_len) ** float(beta)
    deterministic = below_log_threshold(z_prior, exponent)
    nearly_uniform = below_log_threshold(1.0 - np.asarray(z_cond, dtype=float), exponent)
    classes = np.full(block_len, CLASS_INFO, dtype=np.int8)
    classes[nearly_uniform] = CLASS_FROZEN_RANDOM
    classes[deterministic] = CLASS_FROZEN_DETERMINISTIC
    return classes


@dataclass(frozen=True)
class PolarProfile:
    """Construction output for one (channel, block length) pair."""

    channel_id: str
    channel_name: str
    block_len: int
    beta: float
    sample_count: int
    seed: int
    z_cond: np.ndarray
    z_prior: np.ndarray
    h_cond: np.ndarray
    h_prior: np.ndarray
    classes: np.ndarray

    def __post_init__(self):
        for name in ("z_cond", "z_prior", "h_cond", "h_prior", "classes"):
            arr = getattr(self, name)
            if arr.shape != (self.block_len,):
                raise ValueError(f"{name} must have shape ({self.block_len},)")

    # -- index sets ---------------------------------------------------------

    def info_positions(self) -> np.ndarray:
        return np.flatnonzero(self.classes == CLASS_INFO)

    def frozen_random_positions(self) -> np.ndarray:
        return np.flatnonzero(self.classes == CLASS_FROZEN_RANDOM)

    def deterministic_positions(self) -> np.ndarray:
        return np.flatnonzero(self.classes == CLASS_FROZEN_DETERMINISTIC)

    @property
    def payload_fraction(self) -> float:
        """Payload rate |INFO| / N of the lossy code."""
        return len(self.info_positions()) / self.block_len

    @property
    def has_deterministic(self) -> bool:
        return bool(np.any(self.classes == CLASS_FROZEN_DETERMINISTIC))

    def conditional_entropy_estimate(self) -> float:
        """Mean of h_cond; a chain-rule estimate of H(X | Y) in bits/symbol."""
        return float(self.h_cond.mean())

    def prior_entropy_estimate(self) -> float:
        return float(self.h_prior.mean())

    # -- rate control ---------------------------------------------------------

    def with_payload_cap(self, max_fraction: float) -> "PolarProfile":
        """Demote the least reliable payload indices to frozen-random.

        Keeps at most floor(max_fraction * N) INFO positions, dropping those
        with the largest z_cond first (they are the closest to uniform given
        the observation, so dithering them costs the least).
        """
        info = self.info_positions()
        keep = int(np.floor(max_fraction * self.block_len))
        if len(info) <= keep:
            return self
        order = info[np.argsort(-self.z_cond[info], kind="stable")]
        demote = order[: len(info) - keep]
        classes = self.classes.copy()
        classes[demote] = CLASS_FROZEN_RANDOM
        return replace(self, classes=classes)

    def stored_mask(self, stored_fraction: float) -> np.ndarray:
        """Lossless storage set: top ceil(N * fraction) indices by z_cond.

        These are the positions with the least predictable bits given the
        decoder's knowledge; everything outside the mask is recovered by
        maximum-posterior decisions plus the recorded corrections.
        """
        if not 0.0 <= stored_fraction <= 1.0:
            raise ValueError(f"stored_fraction out of [0, 1]: {stored_fraction}")
        count = int(np.ceil(stored_fraction * self.block_len))
        mask = np.zeros(self.block_len, dtype=bool)
        order = np.argsort(-self.z_cond, kind="stable")
        mask[order[:count]] = True
        return mask


def construct_profile(channel: BinarySourceWithSideInfo, block_len: int,
                      beta: float = 0.25, sample_count: int = 256,
                      seed: int = 0) -> PolarProfile:
    """Monte Carlo construction over sample_count true-path traversals."""
    if sample_count < 1:
        raise ValueError("sample_count must be positive")
    gen = rng.stream(seed, rng.STREAM_CONSTRUCTION)
    x, y = channel.sample(sample_count, block_len, gen)
    u_true = polar_transform(x)
    dual = not channel.prior_is_uniform
    n_chains = 2 if dual else 1
    z_sum = np.zeros((n_chains, block_len))
    h_sum = np.zeros((n_chains, block_len))
    for start, stop in chunked_batches(sample_count, n_chains, block_len):
        cond_ev = channel.leaf_evidence(y[start:stop])
        if dual:
            prior_ev = channel.prior_evidence(cond_ev.shape[:-1])
            evidence = np.stack([cond_ev, prior_ev])
        else:
            evidence = cond_ev[None]
        chunk_u = u_true[start:stop]
        batch = stop - start

        def decide(i, probs, chunk_u=chunk_u, batch=batch):
            z_sum[:, i] += (2.0 * np.sqrt(probs[..., 0] * probs[..., 1])).sum(axis=1)
            bits = chunk_u[:, i]
            p_true = probs[:, np.arange(batch), bits.astype(np.intp)]
            h_sum[:, i] += (-np.log2(np.maximum(p_true, 1e-300))).sum(axis=1)
            return bits

        sc_traverse(evidence, decide)
    z_cond = z_sum[0] / sample_count
    h_cond = h_sum[0] / sample_count
    if dual:
        z_prior = z_sum[1] / sample_count
        h_prior = h_sum[1] / sample_count
    else:
        # uniform prior: every prefix-conditional law is exactly uniform
        z_prior = np.ones(block_len)
        h_prior = np.ones(block_len)
    return PolarProfile(
        channel_id=channel.channel_id(), channel_name=channel.name,
        block_len=block_len, beta=beta, sample_count=sample_count, seed=seed,
        z_cond=z_cond, z_prior=z_prior, h_cond=h_cond, h_prior=h_prior,
        classes=classify_indices(z_cond, z_prior, block_len, beta))


# ---------------------------------------------------------------------------
# profile cache (JSON, atomic writes, bit-identical reload)
# ---------------------------------------------------------------------------

def profile_cache_key(channel_id: str, block_len: int, beta: float,
                      sample_count: int, seed: int) -> str:
    return f"profile_{channel_id}_n{block_len}_b{beta:g}_s{sample_count}_r{seed}"


def profile_path(cache_dir, profile_or_key) -> Path:
    key = (profile_or_key if isinstance(profile_or_key, str)
           else profile_cache_key(profile_or_key.channel_id, profile_or_key.block_len,
                                  profile_or_key.beta, profile_or_key.sample_count,
                                  profile_or_key.seed))
    return Path(cache_dir) / f"{key}.json"


def save_profile(profile: PolarProfile, cache_dir) -> Path:
    payload = {
        "version": PROFILE_CACHE_VERSION,
        "kind": "profile",
        "channel_id": profile.channel_id,
        "channel_name": profile.channel_name,
        "N": profile.block_len,
        "beta": profile.beta,
        "sample_count": profile.sample_count,
        "seed": profile.seed,
        "z_cond": profile.z_cond.tolist(),
        "z_prior": profile.z_prior.tolist(),
        "h_cond": profile.h_cond.tolist(),
        "h_prior": profile.h_prior.tolist(),
        "classes": profile.classes.tolist(),
    }
    return atomic_write_text(profile_path(cache_dir, profile), json.dumps(payload))


def load_profile(path) -> PolarProfile:
    data = json.loads(Path(path).read_text())
    if data.get("version") != PROFILE_CACHE_VERSION or data.get("kind") != "profile":
        raise ValueError(f"unrecognized profile file: {path}")
    return PolarProfile(
        channel_id=data["channel_id"], channel_name=data.get("channel_name", ""),
        block_len=int(data["N"]), beta=float(data["beta"]),
        sample_count=int(data["sample_count"]), seed=int(data["seed"]),
        z_cond=np.array(data["z_cond"], dtype=float),
        z_prior=np.array(data["z_prior"], dtype=float),
        h_cond=np.array(data["h_cond"], dtype=float),
        h_prior=np.array(data["h_prior"], dtype=float),
        classes=np.array(data["classes"], dtype=np.int8))


def construct_profile_cached(channel: BinarySourceWithSideInfo, block_len: int,
                             cache_dir, beta: float = 0.25,
                             sample_count: int = 256, seed: int = 0) -> PolarProfile:
    """Load the profile from the cache directory or construct and store it."""
    key = profile_cache_key(channel.channel_id(), block_len, beta, sample_count, seed)
    path = profile_path(cache_dir, key)
    if path.exists():
        return load_profile(path)
    profile = construct_profile(channel, block_len, beta=beta,
                                sample_count=sample_count, seed=seed)
    save_profile(profile, cache_dir)
    return profile
