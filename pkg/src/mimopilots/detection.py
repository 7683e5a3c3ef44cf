"""Zero-forcing detection, Monte-Carlo SINR estimation, and spectral efficiency.

The detector at each BS combines with the pseudo-inverse of its channel
estimate (reconstructed LOS plus least-squares scatter estimate). SINRs are
conditional on user locations: expectations over small-scale fading are
sample means over fresh channel realizations, with the combiner rebuilt from
estimates every realization and the true channels used as ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSampler, crandn
from .estimation import estimated_los_channel, estimated_los_rx, ls_estimate
from .model import ConfigError, NetworkConfig, UserRecord
from .pilots import AllocationPlan, build_pilot_book, pilot_matrix

# floor for the SINR denominator when the sample variance underflows
_DENOM_FLOOR = 1e-12

# relative singular-value cutoff for the rank-revealing pseudo-inverse
_ZF_RCOND = 1e-8


def zf_combiner(ghat: np.ndarray) -> np.ndarray:
    """Zero-forcing combiner W = Ghat @ pinv(Ghat^H Ghat).

    Computed through the SVD pseudo-inverse with singular values below
    1e-8 * sigma_max treated as zero, so duplicated estimate columns (intra-
    cell pilot reuse) resolve to the minimum-norm combiner instead of
    blowing up. For a single column this is g / (g^H g); for full-rank
    estimates W^H @ Ghat == I.
    """
    ghat = np.asarray(ghat)
    if ghat.ndim != 2:
        raise ValueError("channel estimate must be a 2-D matrix")
    if not np.any(ghat):
        raise ValueError("degenerate estimate: all-zero channel matrix")
    return np.linalg.pinv(ghat, rcond=_ZF_RCOND).conj().T


def spectral_efficiency(sinr, pilot_len: int, coherence_len: int):
    """SE = (1 - pilot_len/coherence_len) * log2(1 + sinr), in bits/s/Hz."""
    if pilot_len >= coherence_len:
        raise ConfigError("pilot_len must be smaller than coherence_len")
    sinr = np.asarray(sinr, dtype=float)
    if np.any(sinr < 0):
        raise ValueError("SINR must be non-negative")
    out = (1.0 - pilot_len / coherence_len) * np.log2(1.0 + sinr)
    return out if out.ndim else float(out)


def estimate_sinr(cfg: NetworkConfig, users: list[UserRecord],
                  plan: AllocationPlan, trials: int,
                  rng: np.random.Generator) -> np.ndarray:
    """Per-user SINR, shape (L, N), for fixed locations and pilot plan.

    Each trial draws fresh channels, synthesizes the pilot phase, subtracts
    the reconstructed LOS, forms LS estimates, and rebuilds the ZF combiner.
    Sample means over trials estimate the useful-signal mean, all
    interference second moments, and the combiner norm; the denominator is
    floored at 1e-12.
    """
    if trials < 2:
        raise ConfigError(f"need at least 2 trials, got {trials}")
    L, N, M = cfg.L, cfg.N, cfg.M
    book = build_pilot_book(cfg.pilot_len)
    lambdas = [pilot_matrix(plan, i, book) for i in range(L)]
    sampler = ChannelSampler(users, cfg)
    noise_var = 1.0 / cfg.rho

    # location-only pieces, constant across trials
    ghat_los = [estimated_los_channel(users, cfg, cell=l, bs=l) for l in range(L)]
    ybar = [estimated_los_rx(users, cfg, plan, book, bs=l) for l in range(L)]

    sum_sig = np.zeros((L, N), dtype=complex)     # w^H g of the own user
    sum_pow = np.zeros((L, N, L * N))             # |w^H g|^2, all users
    sum_wsq = np.zeros((L, N))                    # ||w||^2
    for _ in range(trials):
        cs = sampler.draw(rng)
        for l in range(L):
            y = np.zeros((M, cfg.pilot_len), dtype=complex)
            for i in range(L):
                y += cs.g[i, l] @ lambdas[i]
            y += np.sqrt(noise_var) * crandn(rng, (M, cfg.pilot_len))
            gtilde_hat = ls_estimate(y - ybar[l], lambdas[l])
            w = zf_combiner(ghat_los[l] + gtilde_hat)
            g_all = np.concatenate([cs.g[i, l] for i in range(L)], axis=1)
            prod = w.conj().T @ g_all             # (N, L*N)
            sum_pow[l] += np.abs(prod) ** 2
            sum_sig[l] += prod[np.arange(N), l * N + np.arange(N)]
            sum_wsq[l] += np.sum(np.abs(w) ** 2, axis=0)

    mean_sig_sq = np.abs(sum_sig / trials) ** 2
    denom = (sum_pow.sum(axis=2) / trials - mean_sig_sq
             + noise_var * sum_wsq / trials)
    return mean_sig_sq / np.maximum(denom, _DENOM_FLOOR)


@dataclass
class SEReport:
    """Per-user SINR/SE with per-cell sums and Monte-Carlo bookkeeping."""

    sinr: np.ndarray            # (L, N) linear
    se: np.ndarray              # (L, N) bits/s/Hz
    sum_se: np.ndarray          # (L,)
    trials: int
    drops: int = 1
    stderr: np.ndarray | None = None   # (L,) std error of sum_se, if known

    @classmethod
    def from_sinr(cls, sinr: np.ndarray, cfg: NetworkConfig, trials: int,
                  drops: int = 1, stderr: np.ndarray | None = None) -> "SEReport":
        se = spectral_efficiency(sinr, cfg.pilot_len, cfg.coherence_len)
        return cls(sinr=sinr, se=se, sum_se=se.sum(axis=1), trials=trials,
                   drops=drops, stderr=stderr)
