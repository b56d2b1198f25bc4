"""Discrete-event simulation of a fast-finality sequencer.

Bots race to capture a recurring AMM mispricing through a private mempool.
The sequencer closes a block every ``block_time`` seconds and orders each
batch window either first-come-first-served or by priority fee. Reverts
are deterministic: a transaction fails when the pool has drifted past its
minimum-out bound (set from the fresh opportunity), never by coin flip, so
larger and later swaps fail more, endogenously.

The CEX leg is pre-committed at a fixed price and always settles, so a
reverted AMM leg strands inventory at the liquidation penalty. Gas is a
flat per-attempt overhead.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .amm_core import PoolState, apply_swap, swap_out

__all__ = [
    "ConfigError",
    "BotSpec",
    "SimConfig",
    "SimTx",
    "TxOutcome",
    "SimReport",
    "order_batch",
    "execute_tx",
    "run",
    "summarize",
    "fee_rank_correlation",
]

STRATEGIES = ("single_shot", "split_n", "duplicate_k", "split_and_duplicate")
ORDERINGS = ("fcfs", "pfa_within_batch")


class ConfigError(ValueError):
    """Invalid configuration; message names the offending field."""


def _require(cond: bool, path: str, msg: str):
    if not cond:
        raise ConfigError(f"{path}: {msg}")


@dataclass(frozen=True)
class BotSpec:
    name: str
    strategy: str
    trade_size: float
    n_chunks: int = 1
    k_copies: int = 1
    priority_fee: float = 0.0
    latency_mean: float = 0.0
    latency_jitter: float = 0.0
    slippage_tolerance: float = 0.0

    def __post_init__(self):
        _require(self.strategy in STRATEGIES, "strategy", f"must be one of {STRATEGIES}")
        _require(self.trade_size > 0, "trade_size", "must be positive")
        _require(self.n_chunks >= 1, "n_chunks", "must be >= 1")
        _require(self.k_copies >= 1, "k_copies", "must be >= 1")
        _require(self.priority_fee >= 0, "priority_fee", "must be nonnegative")
        _require(self.latency_mean >= 0, "latency_mean", "must be nonnegative")
        _require(self.latency_jitter >= 0, "latency_jitter", "must be nonnegative")
        _require(0 <= self.slippage_tolerance < 1, "slippage_tolerance", "must be in [0, 1)")

    def tx_sizes(self) -> list[float]:
        """Per-opportunity transaction sizes, chunk-major for duplicates."""
        if self.strategy == "single_shot":
            return [self.trade_size]
        if self.strategy == "split_n":
            return [self.trade_size / self.n_chunks] * self.n_chunks
        if self.strategy == "duplicate_k":
            return [self.trade_size] * self.k_copies
        chunk = self.trade_size / self.n_chunks
        return [chunk for _ in range(self.n_chunks) for _ in range(self.k_copies)]


_BOT_KEYS = {f for f in BotSpec.__dataclass_fields__}


@dataclass(frozen=True)
class SimConfig:
    block_time: float
    pool: PoolState
    cex_price: float
    horizon: float
    bots: tuple[BotSpec, ...]
    seed: int = 0
    ordering: str = "fcfs"
    batch_window: float | None = None  # None -> block_time
    opportunity_refresh: float | None = None  # None -> horizon (single opportunity)
    gas_overhead: float = 0.0
    liquidation_penalty: float = 0.0

    def __post_init__(self):
        _require(self.block_time > 0, "block_time", "must be positive")
        _require(self.horizon >= self.block_time, "horizon", "must be >= block_time")
        _require(len(self.bots) >= 1, "bots", "need at least one bot")
        _require(self.ordering in ORDERINGS, "ordering", f"must be one of {ORDERINGS}")
        _require(self.cex_price > 0, "cex_price", "must be positive")
        _require(self.seed >= 0, "seed", "must be a nonnegative integer")
        if self.batch_window is not None:
            _require(self.batch_window >= 0, "batch_window", "must be nonnegative")
        if self.opportunity_refresh is not None:
            _require(self.opportunity_refresh > 0, "opportunity_refresh", "must be positive")
        _require(self.gas_overhead >= 0, "gas_overhead", "must be nonnegative")
        _require(self.liquidation_penalty >= 0, "liquidation_penalty", "must be nonnegative")

    @property
    def effective_batch_window(self) -> float:
        return self.block_time if self.batch_window is None else self.batch_window

    @property
    def effective_refresh(self) -> float:
        return self.horizon if self.opportunity_refresh is None else self.opportunity_refresh

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        known = {
            "version", "block_time", "batch_window", "ordering", "pool", "cex_price",
            "opportunity_refresh", "bots", "horizon", "seed", "gas_overhead",
            "liquidation_penalty",
        }
        for key in d:
            _require(key in known, key, "unknown config field")
        _require("pool" in d, "pool", "required")
        _require("bots" in d, "bots", "required")
        pool_d = d["pool"]
        for key in pool_d:
            _require(key in ("reserve_x", "reserve_y", "fee"), f"pool.{key}", "unknown field")
        bots = []
        for i, b in enumerate(d["bots"]):
            for key in b:
                _require(key in _BOT_KEYS, f"bots[{i}].{key}", "unknown field")
            b = dict(b)
            b.setdefault("name", f"bot{i}")
            bots.append(BotSpec(**b))
        try:
            return cls(
                block_time=float(d["block_time"]),
                pool=PoolState(**pool_d),
                cex_price=float(d["cex_price"]),
                horizon=float(d["horizon"]),
                bots=tuple(bots),
                seed=int(d.get("seed", 0)),
                ordering=d.get("ordering", "fcfs"),
                batch_window=None if d.get("batch_window") is None else float(d["batch_window"]),
                opportunity_refresh=(
                    None if d.get("opportunity_refresh") is None else float(d["opportunity_refresh"])
                ),
                gas_overhead=float(d.get("gas_overhead", 0.0)),
                liquidation_penalty=float(d.get("liquidation_penalty", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class SimTx:
    bot_id: int
    submit_time: float
    arrival_time: float
    size: float
    priority_fee: float
    submission_seq: int
    min_out: float


@dataclass(frozen=True)
class TxOutcome:
    bot_id: int
    bot_name: str
    submission_seq: int
    block_number: int
    position: int
    status: str  # "success" | "reverted"
    size: float
    priority_fee: float
    arrival_time: float
    payout: float
    profit: float


@dataclass(frozen=True)
class SimReport:
    seed: int
    num_blocks: int
    outcomes: tuple[TxOutcome, ...]
    per_bot_profit: dict[str, float]

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))


def order_batch(txs: list[SimTx], policy: str) -> list[SimTx]:
    """Order one batch: FCFS by (arrival, submission seq); the priority-fee
    auction sorts by descending fee with arrival then seq as tie-breaks."""
    if policy == "fcfs":
        return sorted(txs, key=lambda t: (t.arrival_time, t.submission_seq))
    if policy == "pfa_within_batch":
        return sorted(txs, key=lambda t: (-t.priority_fee, t.arrival_time, t.submission_seq))
    raise ConfigError(f"ordering: unknown policy {policy!r}")


def execute_tx(pool: PoolState, tx: SimTx) -> tuple[bool, float, PoolState]:
    """Try one swap against the current pool.

    Succeeds iff the realized output meets the transaction's minimum-out
    bound; success drifts the reserves, a revert leaves them untouched.
    Returns (success, payout, new pool).
    """
    dy = swap_out(pool, tx.size)
    if dy >= tx.min_out:
        return True, dy, apply_swap(pool, tx.size)
    return False, 0.0, pool


def _generate_txs(config: SimConfig, rng: np.random.Generator) -> list[SimTx]:
    txs: list[SimTx] = []
    seq = 0
    refresh = config.effective_refresh
    n_opps = max(1, math.ceil(config.horizon / refresh))
    for k in range(n_opps):
        t_k = k * refresh
        if t_k >= config.horizon:
            break
        for bot_id, bot in enumerate(config.bots):
            for size in bot.tx_sizes():
                if bot.latency_jitter > 0:
                    # exponential jitter: nonnegative, no pile-up at zero
                    latency = bot.latency_mean + rng.exponential(bot.latency_jitter)
                else:
                    latency = bot.latency_mean
                quoted = swap_out(config.pool, size)
                # bot demands at least the fresh-pool quote net of its
                # slippage tolerance, and never less than CEX break-even
                min_out = max(
                    quoted * (1.0 - bot.slippage_tolerance),
                    size * config.cex_price,
                )
                txs.append(
                    SimTx(
                        bot_id=bot_id,
                        submit_time=t_k,
                        arrival_time=t_k + latency,
                        size=size,
                        priority_fee=bot.priority_fee,
                        submission_seq=seq,
                        min_out=min_out,
                    )
                )
                seq += 1
    return txs


def run(config: SimConfig) -> SimReport:
    """Run one simulation; deterministic given the config (incl. seed).

    Every submitted transaction is included exactly once in some block (the
    sequencer never drops) and marked success or reverted.
    """
    rng = np.random.default_rng(config.seed)
    txs = _generate_txs(config, rng)

    bt = config.block_time
    by_block: dict[int, list[SimTx]] = {}
    for tx in txs:
        block = max(1, math.ceil(tx.arrival_time / bt))
        by_block.setdefault(block, []).append(tx)

    refresh = config.effective_refresh
    refresh_times = [k * refresh for k in range(max(1, math.ceil(config.horizon / refresh)))]
    next_refresh = 0

    pool = config.pool
    outcomes: list[TxOutcome] = []
    per_bot = {bot.name: 0.0 for bot in config.bots}
    max_block = max(by_block) if by_block else 0

    for block in range(1, max_block + 1):
        block_start = (block - 1) * bt
        # an opportunity landing at or before the block start resets the
        # pool before this block's transactions execute
        while next_refresh < len(refresh_times) and refresh_times[next_refresh] <= block_start:
            pool = config.pool
            next_refresh += 1

        arrivals = by_block.get(block, [])
        bw = config.effective_batch_window
        if bw <= 0:
            ordered = order_batch(arrivals, "fcfs")
        else:
            batches: dict[int, list[SimTx]] = {}
            for tx in arrivals:
                idx = int((tx.arrival_time - block_start) // bw)
                batches.setdefault(idx, []).append(tx)
            ordered = []
            for idx in sorted(batches):
                ordered.extend(order_batch(batches[idx], config.ordering))

        for position, tx in enumerate(ordered):
            success, payout, pool = execute_tx(pool, tx)
            if success:
                profit = payout - config.cex_price * tx.size - config.gas_overhead
            else:
                profit = (
                    -config.cex_price * tx.size
                    - config.liquidation_penalty
                    - config.gas_overhead
                )
            bot_name = config.bots[tx.bot_id].name
            per_bot[bot_name] += profit
            outcomes.append(
                TxOutcome(
                    bot_id=tx.bot_id,
                    bot_name=bot_name,
                    submission_seq=tx.submission_seq,
                    block_number=block,
                    position=position,
                    status="success" if success else "reverted",
                    size=tx.size,
                    priority_fee=tx.priority_fee,
                    arrival_time=tx.arrival_time,
                    payout=payout,
                    profit=profit,
                )
            )

    return SimReport(
        seed=config.seed,
        num_blocks=max_block,
        outcomes=tuple(outcomes),
        per_bot_profit=per_bot,
    )


def summarize(report: SimReport) -> dict:
    """Aggregate metrics: revert rate, revert position histogram, per-bot
    profit, and the priority-fee vs all revert-rate differential."""
    total = len(report.outcomes)
    reverts = [o for o in report.outcomes if o.status == "reverted"]
    histogram: dict[int, int] = {}
    for o in reverts:
        histogram[o.position] = histogram.get(o.position, 0) + 1
    pf = [o for o in report.outcomes if o.priority_fee > 0]
    pf_reverts = sum(1 for o in pf if o.status == "reverted")
    revert_rate = len(reverts) / total if total else 0.0
    pf_rate = pf_reverts / len(pf) if pf else None
    return {
        "total_txs": total,
        "successes": total - len(reverts),
        "reverts": len(reverts),
        "revert_rate": revert_rate,
        "revert_position_histogram": dict(sorted(histogram.items())),
        "per_bot_profit": dict(report.per_bot_profit),
        "priority_revert_rate": pf_rate,
        "priority_revert_differential": (pf_rate - revert_rate) if pf_rate is not None else None,
    }


def fee_rank_correlation(report: SimReport) -> float:
    """Pearson correlation between priority fee and global execution rank
    (0 = first executed). NaN when either side is constant."""
    fees = np.array([o.priority_fee for o in report.outcomes])
    ranks = np.arange(len(fees), dtype=float)
    if len(fees) < 2 or np.all(fees == fees[0]):
        return float("nan")
    return float(np.corrcoef(fees, ranks)[0, 1])
