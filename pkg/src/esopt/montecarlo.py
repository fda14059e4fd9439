"""Monte Carlo pricer under geometric Brownian motion.

Terminal prices are sampled exactly from the lognormal law, so there is no
time-stepping bias. Paths are grouped into fixed-size blocks; block ``b`` draws
from a Philox counter-based stream keyed by the seed with counter word ``b``,
so every block's variates are fixed by ``(seed, b)`` alone. Block partial sums
are combined in block order with :func:`math.fsum`, making the estimate
bit-identical for any number of workers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analytic import MarketParams, Method, PriceQuote, normal_ppf
from .errors import DegenerateLimitError, EsoptError

BLOCK_SIZE = 1 << 16
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class McConfig:
    paths: int = 1_000_000
    seed: int = 20240101
    antithetic: bool = False
    workers: int = 1
    block_size: int = BLOCK_SIZE

    def __post_init__(self):
        if isinstance(self.paths, bool) or not isinstance(self.paths, int) or self.paths < 1:
            raise EsoptError(f"paths: must be a positive integer, got {self.paths!r}")
        if self.workers < 1:
            raise EsoptError(f"workers: must be >= 1, got {self.workers!r}")
        if self.block_size < 2 or self.block_size % 2:
            raise EsoptError("block_size: must be an even integer >= 2")


def block_uniforms(seed: int, block: int, n: int) -> np.ndarray:
    """``n`` uniforms in the open interval (0, 1) from block ``block``'s stream."""
    key = [seed & _MASK64, (seed >> 64) & _MASK64]
    bitgen = np.random.Philox(key=key, counter=[0, 0, block, 0])
    raw = bitgen.random_raw(n)
    # top 53 bits, shifted by half an ulp so 0 and 1 are unreachable
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def _block_sums(s, m: MarketParams, seed, block, n, antithetic):
    tau = m.tau
    drift = (m.r - 0.5 * m.sigma**2) * tau
    vol = m.sigma * math.sqrt(tau)
    disc = math.exp(-m.r * tau)
    k = m.strike
    if antithetic:
        z = normal_ppf(block_uniforms(seed, block, n // 2))
        up = s * np.exp(drift + vol * z)
        dn = s * np.exp(drift - vol * z)
        # each antithetic pair is one sample
        call = 0.5 * disc * (np.maximum(up - k, 0.0) + np.maximum(dn - k, 0.0))
        put = 0.5 * disc * (np.maximum(k - up, 0.0) + np.maximum(k - dn, 0.0))
        spot = 0.5 * disc * (up + dn)
    else:
        z = normal_ppf(block_uniforms(seed, block, n))
        st = s * np.exp(drift + vol * z)
        call = disc * np.maximum(st - k, 0.0)
        put = disc * np.maximum(k - st, 0.0)
        spot = disc * st
    diff = call - put
    return np.array([
        call.size,
        call.sum(), np.dot(call, call),
        put.sum(), np.dot(put, put),
        spot.sum(), np.dot(spot, spot),
        diff.sum(), np.dot(diff, diff),
    ])


@dataclass(frozen=True)
class McResult:
    """Monte Carlo estimates with standard errors.

    ``samples`` counts independent samples (antithetic pairs count once).
    ``discounted_spot`` estimates ``E[e^{-r tau} S_T]``, which equals the
    spot for GBM.
    """

    call: float
    put: float
    call_stderr: float
    put_stderr: float
    discounted_spot: float
    spot_stderr: float
    parity_stderr: float
    samples: int

    def to_quote(self, spot: float) -> PriceQuote:
        return PriceQuote(
            call=self.call,
            put=self.put,
            method=Method.MONTE_CARLO,
            error_estimate=self.call_stderr,
            spot=spot,
            put_error_estimate=self.put_stderr,
        )


def _mean_se(total, sq, n):
    mean = total / n
    if n < 2:
        return mean, float("inf")
    var = max(sq - n * mean * mean, 0.0) / (n - 1)
    return mean, math.sqrt(var / n)


def mc_simulate(s: float, m: MarketParams, cfg: McConfig | None = None) -> McResult:
    cfg = cfg or McConfig()
    if not s > 0:
        raise EsoptError(f"spot: must be positive, got {s!r}")
    if m.tau == 0.0 or m.sigma == 0.0:
        raise DegenerateLimitError("Monte Carlo needs tau > 0 and sigma > 0")
    draws = cfg.paths
    if cfg.antithetic:
        draws = 2 * ((cfg.paths + 1) // 2)
    bs = cfg.block_size
    blocks = [(b, min(bs, draws - b * bs)) for b in range((draws + bs - 1) // bs)]

    def work(item):
        b, n = item
        return _block_sums(s, m, cfg.seed, b, n, cfg.antithetic)

    if cfg.workers == 1 or len(blocks) == 1:
        parts = [work(it) for it in blocks]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(work, blocks))
    cols = np.array(parts)
    totals = [math.fsum(cols[:, j]) for j in range(cols.shape[1])]
    n = int(totals[0])
    call, call_se = _mean_se(totals[1], totals[2], n)
    put, put_se = _mean_se(totals[3], totals[4], n)
    fwd, fwd_se = _mean_se(totals[5], totals[6], n)
    _, par_se = _mean_se(totals[7], totals[8], n)
    return McResult(call, put, call_se, put_se, fwd, fwd_se, par_se, n)


def mc_price(s: float, m: MarketParams, cfg: McConfig | None = None) -> PriceQuote:
    """Monte Carlo quote; ``error_estimate`` is the call's standard error."""
    return mc_simulate(s, m, cfg).to_quote(s)


def default_seed() -> int:
    """Seed from ``ESOPT_SEED`` if set, else the library default."""
    raw = os.environ.get("ESOPT_SEED")
    if raw is None or raw == "":
        return McConfig.seed
    try:
        return int(raw, 0)
    except ValueError:
        raise EsoptError(f"ESOPT_SEED: not an integer: {raw!r}") from None
