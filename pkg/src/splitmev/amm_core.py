"""Constant-product AMM swap mechanics.

All quantities are real-valued (doubles); the model is continuous, so no
token-decimal fixed point anywhere. Functions accept numpy arrays for the
trade size and broadcast.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["DomainError", "PoolState", "swap_out", "marginal_out", "apply_swap", "spot_price"]

# Beyond this ratio x + (1-f)q loses too much relative precision for the
# concavity/derivative guarantees to mean anything.
_MAX_SIZE_RATIO = 1e12


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


@dataclass(frozen=True)
class PoolState:
    """Reserves (x, y) and input fee f of a constant-product pool."""

    reserve_x: float
    reserve_y: float
    fee: float = 0.0

    def __post_init__(self):
        if not (self.reserve_x > 0 and np.isfinite(self.reserve_x)):
            raise DomainError(f"reserve_x must be positive, got {self.reserve_x}")
        if not (self.reserve_y > 0 and np.isfinite(self.reserve_y)):
            raise DomainError(f"reserve_y must be positive, got {self.reserve_y}")
        if not (0.0 <= self.fee < 1.0):
            raise DomainError(f"fee must be in [0, 1), got {self.fee}")


def _check_size(pool: PoolState, q, allow_zero: bool) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    lo_ok = (q >= 0) if allow_zero else (q > 0)
    if not np.all(lo_ok & np.isfinite(q)):
        raise DomainError(f"trade size must be {'nonnegative' if allow_zero else 'positive'} and finite")
    if np.any(q / pool.reserve_x > _MAX_SIZE_RATIO):
        raise DomainError("trade size too large relative to reserves (precision guard)")
    return q


def swap_out(pool: PoolState, q):
    """Amount of Y received for swapping in q units of X.

    Defined as 0 at q=0 by continuity so optimizers can probe the boundary.
    """
    q = _check_size(pool, q, allow_zero=True)
    g = (1.0 - pool.fee) * q
    out = pool.reserve_y * g / (pool.reserve_x + g)
    return out if out.ndim else float(out)


def marginal_out(pool: PoolState, q):
    """d/dq of swap_out: y(1-f)x / (x + (1-f)q)^2. Strictly decreasing in q."""
    q = _check_size(pool, q, allow_zero=True)
    g = pool.reserve_x + (1.0 - pool.fee) * q
    out = pool.reserve_y * (1.0 - pool.fee) * pool.reserve_x / (g * g)
    return out if out.ndim else float(out)


def apply_swap(pool: PoolState, q: float) -> PoolState:
    """Pool state after a successful swap of q units of X."""
    q = float(_check_size(pool, q, allow_zero=False))
    dy = swap_out(pool, q)
    return PoolState(
        reserve_x=pool.reserve_x + (1.0 - pool.fee) * q,
        reserve_y=pool.reserve_y - dy,
        fee=pool.fee,
    )


def spot_price(pool: PoolState) -> float:
    """Instantaneous pool price y/x (Y per X)."""
    return pool.reserve_y / pool.reserve_x
