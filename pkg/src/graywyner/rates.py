"""Rate triples for the one-encoder two-decoder network."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class RateTriple:
    """Common rate r0 and private rates r1 (X branch), r2 (Y branch)."""

    r0: float
    r1: float
    r2: float

    def __post_init__(self):
        for name in ("r0", "r1", "r2"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def total(self) -> float:
        return self.r0 + self.r1 + self.r2

    def satisfies_lossless_bounds(self, h_x: float, h_y: float, h_xy: float,
                                  slack: float = 1e-9) -> bool:
        """Cut-set lower bounds every achievable lossless triple obeys:
        r0+r1+r2 >= H(X,Y), r0+r1 >= H(X), r0+r2 >= H(Y)."""
        return (self.total >= h_xy - slack
                and self.r0 + self.r1 >= h_x - slack
                and self.r0 + self.r2 >= h_y - slack)
