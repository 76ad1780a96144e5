"""Result records and the fixed CSV/JSON emission schema.

Every scenario writes the same thirteen CSV columns so downstream figure
scripts share one reader:

    scenario, N, seed, block, R0, R1, R2, R_total,
    dist_x, dist_y, theory_R, theory_CI, runtime_ms

Column use by scenario:

* coding runs (dsbs-lossless, dsbs-lossy, gaussian, gaussian-L): R0/R1/R2
  are measured bits per symbol for the common and private branches, the
  dist columns per-block distortions (Hamming or squared error), theory_R
  the closed-form total-rate target and theory_CI the matching common
  information.
* lemma-check: R0 and R_total carry the measured mutual information and
  theory_R/theory_CI its exact target; dist_x is the variation distance
  between the smoothed and exact source laws (nan on the Monte Carlo
  path, which does not integrate densities) and dist_y the information
  gap.  One row per seed.
* property-suite: one row per property family in run order; dist_x is the
  family's failure count and dist_y its trial count; rate columns are 0.

runtime_ms is written as 0 in every row: the CSV contract is byte-identical
output for identical configs, so wall-clock timing goes to the JSON sidecar
(``wall_clock_seconds``) instead, where reproducibility is not promised.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .._fileio import atomic_write_text

CSV_COLUMNS = ("scenario", "N", "seed", "block", "R0", "R1", "R2", "R_total",
               "dist_x", "dist_y", "theory_R", "theory_CI", "runtime_ms")

RECORD_FORMAT = "graywyner-run"
RECORD_VERSION = 1


@dataclass(frozen=True)
class ExperimentRecord:
    """Per-seed measurements: per-block arrays plus closed-form targets."""

    scenario: str
    block_len: int
    seed: int
    config_hash: str
    label: str
    r0: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    dist_x: np.ndarray
    dist_y: np.ndarray
    theory_r: float
    theory_ci: float
    wall_clock_seconds: float
    cache_ids: Tuple[str, ...] = ()
    invariant_ok: bool = True
    detail: Optional[dict] = None

    def __post_init__(self):
        lengths = {len(self.r0), len(self.r1), len(self.r2),
                   len(self.dist_x), len(self.dist_y)}
        if lengths != {len(self.r0)} or len(self.r0) == 0:
            raise ValueError("per-block arrays must share one nonzero length")
        for name in ("r0", "r1", "r2"):
            if float(getattr(self, name).min()) < -1e-12:
                raise ValueError(f"empirical rate {name} went negative")

    @property
    def n_blocks(self) -> int:
        return len(self.r0)

    @property
    def total(self) -> np.ndarray:
        return self.r0 + self.r1 + self.r2

    def rows(self):
        """CSV rows for this record, one per block."""
        total = self.total
        for b in range(self.n_blocks):
            yield (self.scenario, self.block_len, self.seed, b,
                   float(self.r0[b]), float(self.r1[b]), float(self.r2[b]),
                   float(total[b]), float(self.dist_x[b]), float(self.dist_y[b]),
                   self.theory_r, self.theory_ci, 0)

    def summary_dict(self) -> dict:
        out = {
            "seed": self.seed,
            "label": self.label,
            "blocks": self.n_blocks,
            "mean_R0": float(self.r0.mean()),
            "mean_R1": float(self.r1.mean()),
            "mean_R2": float(self.r2.mean()),
            "mean_R_total": float(self.total.mean()),
            "mean_dist_x": float(self.dist_x.mean()),
            "mean_dist_y": float(self.dist_y.mean()),
            "theory_R": self.theory_r,
            "theory_CI": self.theory_ci,
            "wall_clock_seconds": self.wall_clock_seconds,
            "cache_ids": list(self.cache_ids),
            "invariant_ok": self.invariant_ok,
        }
        if self.detail is not None:
            out["detail"] = self.detail
        return out


def _format_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.12g}"


def render_csv(records) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for record in records:
        for row in record.rows():
            lines.append(",".join(_format_value(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path, records) -> Path:
    return atomic_write_text(Path(path), render_csv(records))


def json_sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def write_json(path, config, records) -> Path:
    all_ids = sorted({cid for r in records for cid in r.cache_ids})
    payload = {
        "format": RECORD_FORMAT,
        "version": RECORD_VERSION,
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "cache_ids": all_ids,
        "wall_clock_seconds": sum(r.wall_clock_seconds for r in records),
        "records": [r.summary_dict() for r in records],
    }
    return atomic_write_text(Path(path), json.dumps(payload, indent=1))


def read_record_cache_ids(path) -> set:
    """Cache ids referenced by one run-record JSON file; empty if it is
    not a run record."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError):
        return set()
    if not isinstance(data, dict) or data.get("format") != RECORD_FORMAT:
        return set()
    ids = set(data.get("cache_ids", ()))
    for record in data.get("records", ()):
        ids.update(record.get("cache_ids", ()))
    return ids
