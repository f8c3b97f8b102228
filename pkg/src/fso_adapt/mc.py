"""Monte Carlo verification harness.

Sample-based estimates of the spectral-efficiency quantities, empirical
audits of the average-power constraints, and a symbol-level Gray-coded
square-QAM simulator for validating the exponential BER bound.

Determinism contract: for a fixed (seed, workers, n_samples) triple the
results are bit-stable; per-worker streams are spawned from the seed and
partial results are combined in worker order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .adapt import (
    AdaptiveSolution,
    BerPolicy,
    ConstellationSet,
    SnrSpec,
    solve_cutoff_continuous,
    solve_cutoff_discrete,
)
from .channel import ChannelModel, sample_irradiance

__all__ = [
    "McConfig",
    "QamSimConfig",
    "AuditReport",
    "estimate_ase_mc",
    "estimate_discrete_ase_mc",
    "simulate_qam_ber",
    "audit_power_constraint",
]


@dataclass(frozen=True)
class McConfig:
    """Sample count, seed and worker-stream count for one Monte Carlo run."""

    n_samples: int = 40_000
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.n_samples < 1_000:
            raise ValueError("n_samples below 1000 cannot support statistical claims")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


@dataclass(frozen=True)
class QamSimConfig:
    """One square-QAM AWGN simulation point."""

    m: int
    inst_snr_db: float
    n_symbols: int
    mapping: str = "gray"

    def __post_init__(self):
        r = round(math.log(self.m, 4)) if self.m >= 4 else -1
        if r < 1 or 4**r != self.m:
            raise ValueError(f"m must be a power of 4 (square QAM), got {self.m}")
        if self.n_symbols < 1:
            raise ValueError("n_symbols must be positive")
        if self.mapping != "gray":
            raise ValueError(f"only gray mapping is supported, got {self.mapping!r}")


@dataclass(frozen=True)
class AuditReport:
    """Outcome of an empirical average-power audit."""

    scheme: str
    empirical_power: float
    expected_power: float
    std_error: float
    z_score: float
    passed: bool
    n_samples: int


def _worker_chunks(cfg: McConfig):
    """Per-worker (generator, count) pairs in deterministic worker order."""
    seqs = np.random.SeedSequence(cfg.seed).spawn(cfg.workers)
    base, extra = divmod(cfg.n_samples, cfg.workers)
    out = []
    for idx, seq in enumerate(seqs):
        n = base + (1 if idx < extra else 0)
        if n:
            out.append((np.random.Generator(np.random.Philox(seq)), n))
    return out


def _reduce_mean(model: ChannelModel, cfg: McConfig, transform):
    """Mean and standard error of transform(I) over the configured samples."""
    total = 0.0
    total_sq = 0.0
    n = 0
    for rng, count in _worker_chunks(cfg):
        vals = transform(sample_irradiance(model, rng, size=count))
        total += float(np.sum(vals))
        total_sq += float(np.sum(vals * vals))
        n += count
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0)
    return mean, math.sqrt(var / n)


def estimate_ase_mc(
    snr: SnrSpec,
    policy: BerPolicy,
    model: ChannelModel,
    cfg: McConfig,
    cutoff: float | None = None,
):
    """Sampled spectral efficiency of the continuous-rate policy.

    Returns (mean, std_error) of log2(I/cutoff)^+ over the draws; the
    cutoff is solved from the power constraint unless supplied.
    """
    if cutoff is None:
        cutoff = solve_cutoff_continuous(snr, policy, model).cutoff

    def bits(i):
        return np.maximum(np.log2(np.maximum(i, 1e-300) / cutoff), 0.0)

    return _reduce_mean(model, cfg, bits)


def estimate_discrete_ase_mc(
    snr: SnrSpec,
    policy: BerPolicy,
    model: ChannelModel,
    cset: ConstellationSet,
    cfg: McConfig,
    cutoff: float | None = None,
):
    """Sampled spectral efficiency of the finite constellation ladder."""
    if cutoff is None:
        cutoff = solve_cutoff_discrete(snr, policy, model, cset).cutoff
    sizes = np.array(cset.sizes, dtype=float)
    bounds = sizes[1:] * cutoff  # region i starts at sizes[i] * cutoff
    bits_by_region = np.concatenate(([0.0], np.log2(sizes[1:])))

    def bits(i):
        idx = np.searchsorted(bounds, i, side="right")
        return bits_by_region[idx]

    return _reduce_mean(model, cfg, bits)


# precomputed popcounts for Gray-label XORs (up to 32 levels per axis)
_POPCOUNT = np.array([bin(v).count("1") for v in range(64)], dtype=np.int64)

_CHUNK = 1 << 20


def simulate_qam_ber(cfg: QamSimConfig, rng: np.random.Generator):
    """Bit error rate of Gray-mapped square QAM over AWGN.

    Per-axis PAM with reflected-binary labels and minimum-distance
    detection; inst_snr_db is the average symbol energy over the noise
    power.  Returns (ber, std_error).
    """
    levels = int(round(math.sqrt(cfg.m)))
    bits_per_symbol = int(round(math.log2(cfg.m)))
    gamma = 10.0 ** (cfg.inst_snr_db / 10.0)
    scale = math.sqrt(1.5 / (cfg.m - 1.0))  # unit average symbol energy
    noise_std = math.sqrt(0.5 / gamma)
    idx = np.arange(levels)
    gray = idx ^ (idx >> 1)

    errors = 0
    remaining = cfg.n_symbols
    while remaining > 0:
        n = min(remaining, _CHUNK)
        remaining -= n
        for _axis in range(2):  # I and Q axes are independent and identical
            tx = rng.integers(0, levels, size=n)
            y = (2 * tx - (levels - 1)) * scale + noise_std * rng.standard_normal(n)
            rx = np.clip(np.rint((y / scale + (levels - 1)) / 2.0), 0, levels - 1)
            rx = rx.astype(np.int64)
            errors += int(np.sum(_POPCOUNT[gray[tx] ^ gray[rx]]))
    n_bits = cfg.n_symbols * bits_per_symbol
    ber = errors / n_bits
    return ber, math.sqrt(max(ber * (1.0 - ber), 0.0) / n_bits)


def audit_power_constraint(
    snr: SnrSpec,
    policy: BerPolicy,
    model: ChannelModel,
    solution: AdaptiveSolution,
    cfg: McConfig,
    scheme: str = "continuous",
    cset: ConstellationSet | None = None,
) -> AuditReport:
    """Check E[P(I)]/sigma^2 = SNR empirically for a solved cutoff."""
    k = policy.k_margin
    cutoff = solution.cutoff
    if scheme == "continuous":

        def power(i):
            return np.maximum(1.0 / cutoff - 1.0 / np.maximum(i, 1e-300), 0.0) / k

    elif scheme == "discrete":
        cset = cset or ConstellationSet()
        sizes = np.array(cset.sizes, dtype=float)
        bounds = sizes[1:] * cutoff
        m_minus_1 = np.concatenate(([0.0], sizes[1:] - 1.0))

        def power(i):
            idx = np.searchsorted(bounds, i, side="right")
            return m_minus_1[idx] / (k * np.maximum(i, 1e-300))

    else:
        raise ValueError(f"unknown scheme {scheme!r}")

    mean, se = _reduce_mean(model, cfg, power)
    z = (mean - snr.snr_linear) / se if se > 0 else math.inf
    return AuditReport(
        scheme=scheme,
        empirical_power=mean,
        expected_power=snr.snr_linear,
        std_error=se,
        z_score=z,
        passed=abs(z) <= 5.0,
        n_samples=cfg.n_samples,
    )
