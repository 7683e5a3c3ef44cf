"""Fast self-contained invariant checks, runnable via the `check` subcommand.

Each check returns (name, ok, detail). They re-derive expected values from
independent constructions (brute-force sums, explicit steering vectors,
scatter-only syntheses), so a pass means the closed forms and the simulation
chain agree.
"""

from __future__ import annotations

import numpy as np

from .channel import ChannelSampler, assemble_channels, steering_vector
from .detection import spectral_efficiency, zf_combiner
from .estimation import (estimated_los_channel, ls_estimate, subtract_los,
                         synthesize_rx)
from .los_metric import dirichlet_kernel_sq, los_interference_from_params
from .model import NetworkConfig, sample_users
from .pilots import AllocationPlan, build_pilot_book, correlation, pilot_matrix


def check_steering_vector() -> tuple[str, bool, str]:
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        m = int(rng.integers(1, 128))
        theta = rng.uniform(-np.pi, np.pi)
        v = steering_vector(m, theta)
        worst = max(worst,
                    float(np.max(np.abs(np.abs(v) - 1.0))),
                    abs(v[0] - 1.0),
                    abs(np.vdot(v, v).real - m) / m)
    return "steering vector unit modulus / norm", worst < 1e-12, f"worst dev {worst:.2e}"


def check_pilot_book() -> tuple[str, bool, str]:
    worst = 0.0
    for n in (1, 2, 12, 16, 64):
        book = build_pilot_book(n)
        gram = book @ book.conj().T - n * np.eye(n)
        worst = max(worst, float(np.max(np.abs(gram))))
    return "pilot book orthogonality", worst < 1e-10, f"worst gram dev {worst:.2e}"


def check_dirichlet_kernel() -> tuple[str, bool, str]:
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(500):
        m = int(rng.integers(1, 65))
        theta = rng.uniform(-2 * np.pi, 2 * np.pi)
        brute = abs(np.exp(-1j * theta * np.arange(m)).sum()) ** 2
        closed = dirichlet_kernel_sq(m, theta)
        worst = max(worst, abs(closed - brute) / max(brute, 1e-30))
    zero_ok = all(dirichlet_kernel_sq(m, 2 * b * np.pi / m) < 1e-18 * m * m
                  for m in range(2, 17) for b in range(1, m))
    ok = worst < 1e-9 and zero_ok
    return "closed-form array overlap vs brute force", ok, f"worst rel dev {worst:.2e}"


def check_los_interference_oracle() -> tuple[str, bool, str]:
    rng = np.random.default_rng(13)
    worst = 0.0
    for _ in range(300):
        m = int(rng.integers(1, 65))
        alpha = rng.uniform(0.05, 5.0, size=2)
        k = rng.uniform(0.1, 20.0, size=2)
        theta = rng.uniform(0, 2 * np.pi, size=2)
        res = los_interference_from_params(alpha[0], k[0], theta[0],
                                           alpha[1], k[1], theta[1], m)
        g_a = np.sqrt(alpha[0] * k[0] / (1 + k[0])) * steering_vector(m, theta[0])
        g_b = np.sqrt(alpha[1] * k[1] / (1 + k[1])) * steering_vector(m, theta[1])
        ref = abs(np.vdot(g_b, g_a)) ** 2 / abs(np.vdot(g_b, g_b)) ** 2
        worst = max(worst, abs(res.score - ref) / max(ref, 1e-30))
    return "pair score vs explicit steering vectors", worst < 1e-9, f"worst rel dev {worst:.2e}"


def _distinct_plan(cfg: NetworkConfig) -> AllocationPlan:
    return AllocationPlan(np.tile(np.arange(cfg.N) % cfg.pilot_len, (cfg.L, 1)),
                          "check")


def check_los_subtraction() -> tuple[str, bool, str]:
    cfg = NetworkConfig(L=2, N=6, M=16, pilot_len=6, loc_err_var=0.0, seed=3)
    rng = np.random.default_rng(cfg.seed)
    users = sample_users(cfg, rng)
    plan = _distinct_plan(cfg)
    book = build_pilot_book(cfg.pilot_len)
    cs = assemble_channels(users, cfg, rng)
    y = synthesize_rx(cs, plan, book, 0.0, rng)
    worst = 0.0
    for l in range(cfg.L):
        resid = subtract_los(y[l], users, cfg, plan, book, l)
        ref = sum(cs.nlos_effective(i, l) @ pilot_matrix(plan, i, book)
                  for i in range(cfg.L))
        worst = max(worst, float(np.max(np.abs(resid - ref))))
    return "LOS subtraction exact at zero location error", worst < 1e-9, f"max dev {worst:.2e}"


def check_ls_exactness() -> tuple[str, bool, str]:
    cfg = NetworkConfig(L=1, N=8, M=32, pilot_len=8, seed=5)
    rng = np.random.default_rng(cfg.seed)
    users = sample_users(cfg, rng)
    plan = _distinct_plan(cfg)
    book = build_pilot_book(cfg.pilot_len)
    cs = assemble_channels(users, cfg, rng)
    y = synthesize_rx(cs, plan, book, 0.0, rng)
    resid = subtract_los(y[0], users, cfg, plan, book, 0)
    ghat = ls_estimate(resid, pilot_matrix(plan, 0, book))
    dev = float(np.max(np.abs(ghat - cs.nlos_effective(0, 0))))
    return "LS estimate exact for orthogonal pilots", dev < 1e-9, f"max dev {dev:.2e}"


def check_zf_identity() -> tuple[str, bool, str]:
    rng = np.random.default_rng(17)
    g = rng.standard_normal((24, 6)) + 1j * rng.standard_normal((24, 6))
    w = zf_combiner(g)
    dev = float(np.max(np.abs(w.conj().T @ g - np.eye(6))))
    return "ZF combiner nulls estimated interference", dev < 1e-8, f"max dev {dev:.2e}"


def check_channel_power() -> tuple[str, bool, str]:
    cfg = NetworkConfig(L=1, N=2, M=16, pilot_len=2, k_db=3.0, seed=23)
    rng = np.random.default_rng(cfg.seed)
    users = sample_users(cfg, rng)
    sampler = ChannelSampler(users, cfg)
    acc = np.zeros(cfg.N)
    trials = 2000
    for _ in range(trials):
        cs = sampler.draw(rng)
        acc += np.sum(np.abs(cs.g[0, 0]) ** 2, axis=0)
    rel = np.abs(acc / trials / cfg.M / sampler.alpha[0, 0] - 1.0)
    worst = float(rel.max())
    return "channel second moment = alpha * M", worst < 0.05, f"worst rel dev {worst:.2e}"


def check_detection_identity() -> tuple[str, bool, str]:
    # the four received-signal terms must reassemble w^H y exactly
    rng = np.random.default_rng(29)
    cfg = NetworkConfig(L=2, N=4, M=12, pilot_len=4, seed=29)
    users = sample_users(cfg, rng)
    cs = assemble_channels(users, cfg, rng)
    l = 0
    ghat = estimated_los_channel(users, cfg, l, l)
    w = zf_combiner(ghat)
    x = (rng.standard_normal((cfg.L, cfg.N)) + 1j * rng.standard_normal((cfg.L, cfg.N)))
    noise = (rng.standard_normal(cfg.M) + 1j * rng.standard_normal(cfg.M))
    y = sum(cs.g[i, l] @ x[i] for i in range(cfg.L)) + noise / np.sqrt(cfg.rho)
    worst = 0.0
    for k in range(cfg.N):
        wk = w[:, k]
        mean_gain = np.vdot(wk, cs.g[l, l][:, k])  # stands in for the fading mean
        t1 = mean_gain * x[l, k]
        t2 = (np.vdot(wk, cs.g[l, l][:, k]) - mean_gain) * x[l, k]
        t3 = sum(np.vdot(wk, cs.g[i, l][:, j]) * x[i, j]
                 for i in range(cfg.L) for j in range(cfg.N) if (i, j) != (l, k))
        t4 = np.vdot(wk, noise) / np.sqrt(cfg.rho)
        worst = max(worst, abs(np.vdot(wk, y) - (t1 + t2 + t3 + t4)))
    return "received-signal decomposition is exact", worst < 1e-9, f"max dev {worst:.2e}"


def check_se_formula() -> tuple[str, bool, str]:
    se = spectral_efficiency(1.0, 12, 196)
    ok = abs(se - (1 - 12 / 196)) < 1e-12 and spectral_efficiency(0.0, 12, 196) == 0.0
    return "spectral-efficiency prefactor", ok, f"SE(1)={se:.6f}"


def check_correlation_structure() -> tuple[str, bool, str]:
    cfg = NetworkConfig(L=1, N=36, M=4, pilot_len=12, seed=31)
    book = build_pilot_book(cfg.pilot_len)
    plan = _distinct_plan(cfg)
    lam = pilot_matrix(plan, 0, book)
    r = correlation(lam, lam)
    hits = np.isclose(np.abs(r), cfg.pilot_len, atol=1e-9).sum(axis=1)
    zeros = np.isclose(np.abs(r), 0.0, atol=1e-9).sum(axis=1)
    ok = bool(np.all(hits == 3) and np.all(zeros == cfg.N - 3))
    return "pilot correlation collision structure", ok, f"hits per row {sorted(set(hits))}"


ALL_CHECKS = (
    check_steering_vector,
    check_pilot_book,
    check_dirichlet_kernel,
    check_los_interference_oracle,
    check_los_subtraction,
    check_ls_exactness,
    check_zf_identity,
    check_channel_power,
    check_detection_identity,
    check_se_formula,
    check_correlation_structure,
)


def run_all(verbose: bool = True) -> int:
    """Run every check; returns the number of failures."""
    failures = 0
    for fn in ALL_CHECKS:
        name, ok, detail = fn()
        if not ok:
            failures += 1
        if verbose:
            print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return failures
