"""Self-checks bundling the package's numerical oracles: Gaussian-kernel
approximation quality, finite-difference gradient checks for both predicate
families, and the closed-form parameter-count identities.
"""

from __future__ import annotations

import numpy as np

from .encoder import EncoderConfig, build_encoder, kernel_estimate
from .numerics import make_rng
from .predicates import NtnPredicate, RwfnPredicate, count_params, init_ntn


def gaussian_kernel(x: np.ndarray, y: np.ndarray) -> float:
    d = x - y
    return float(np.exp(-0.5 * d @ d))


def kernel_error_study(widths=(100, 1000, 10000), input_dim: int = 8, n_pairs: int = 100,
                       n_seeds: int = 10, pair_seed: int = 1234) -> dict:
    """Mean |z(x).z(y) - k(x,y)| over fixed random pairs, per hidden width."""
    rng = make_rng(pair_seed)
    xs = rng.random((n_pairs, input_dim))
    ys = rng.random((n_pairs, input_dim))
    truth = np.array([gaussian_kernel(x, y) for x, y in zip(xs, ys)])
    out = {}
    for b in widths:
        errs = []
        for seed in range(n_seeds):
            enc = build_encoder(EncoderConfig(input_dim=input_dim, hidden_width=b, fan_in=7, seed=seed))
            est = np.array([kernel_estimate(enc, x, y) for x, y in zip(xs, ys)])
            errs.append(np.abs(est - truth).mean())
        out[b] = float(np.mean(errs))
    return out


def _rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    na = np.linalg.norm(analytic.ravel())
    nn = np.linalg.norm(numeric.ravel())
    return float(np.linalg.norm((analytic - numeric).ravel()) / max(nn, na, 1e-12))


def gradcheck_rwfn(trials: int = 20, input_dim: int = 8, hidden_width: int = 16,
                   step: float = 1e-5, seed: int = 7) -> float:
    """Max relative error of the decoder gradient vs central differences."""
    rng = make_rng(seed)
    worst = 0.0
    for t in range(trials):
        enc = build_encoder(EncoderConfig(input_dim=input_dim, hidden_width=hidden_width, fan_in=3, seed=seed + t))
        model = RwfnPredicate(encoder=enc, beta=rng.standard_normal(2 * hidden_width))
        v = rng.random(input_dim)
        upstream = float(rng.normal())
        analytic = model.gradient(v, upstream)
        numeric = np.empty_like(analytic)
        for i in range(len(model.beta)):
            saved = model.beta[i]
            model.beta[i] = saved + step
            hi = model.forward(v)
            model.beta[i] = saved - step
            lo = model.forward(v)
            model.beta[i] = saved
            numeric[i] = upstream * (hi - lo) / (2 * step)
        worst = max(worst, _rel_err(analytic, numeric))
    return worst


def gradcheck_ntn(trials: int = 20, input_dim: int = 8, k: int = 3,
                  step: float = 1e-5, seed: int = 11) -> float:
    """Max relative error of u/W/V/b gradients vs central differences."""
    rng = make_rng(seed)
    worst = 0.0
    for t in range(trials):
        model = init_ntn(k, input_dim, make_rng(seed + 100 + t))
        v = rng.random(input_dim)
        upstream = float(rng.normal())
        analytic = model.gradient(v, upstream)
        params = model.learnable_params()
        for pname, arr in params.items():
            numeric = np.empty_like(arr)
            flat = arr.ravel()
            nflat = numeric.ravel()
            for i in range(flat.size):
                saved = flat[i]
                flat[i] = saved + step
                hi = model.forward(v)
                flat[i] = saved - step
                lo = model.forward(v)
                flat[i] = saved
                nflat[i] = upstream * (hi - lo) / (2 * step)
            worst = max(worst, _rel_err(analytic[pname], numeric))
    return worst


def param_count_checks() -> list:
    """The closed-form count identities at the reference configuration."""
    checks = []
    ltn = init_ntn(6, 64, make_rng(0))
    pc = count_params(ltn)
    checks.append(("ltn params (n=64, k=6)", pc.total == 24972 and pc.learnable == 24972,
                   f"{pc.learnable}/{pc.total}"))
    enc = build_encoder(EncoderConfig(input_dim=64, hidden_width=200, fan_in=7, seed=0))
    pc = count_params(RwfnPredicate.create(enc))
    checks.append(("rwfn params (n=64, B=200)", pc.total == 26200 and pc.learnable == 400,
                   f"{pc.learnable}/{pc.total}"))
    enc2 = build_encoder(EncoderConfig(input_dim=128, hidden_width=400, fan_in=7, seed=0))
    pc = count_params(RwfnPredicate.create(enc2))
    checks.append(("rwfn params (n=128, B=400)", pc.total == 103600 and pc.learnable == 800,
                   f"{pc.learnable}/{pc.total}"))
    return checks


def run_verification(kernel_widths=(100, 1000, 10000), gradcheck_trials: int = 20) -> dict:
    """Run all checks; returns a report with per-check pass flags."""
    report = {"checks": [], "passed": True}

    for name, ok, detail in param_count_checks():
        report["checks"].append({"name": name, "passed": bool(ok), "detail": detail})

    errs = kernel_error_study(widths=tuple(kernel_widths))
    seq = [errs[b] for b in sorted(errs)]
    monotone = all(a >= b - 1e-12 for a, b in zip(seq, seq[1:]))
    report["kernel_errors"] = {str(b): errs[b] for b in errs}
    report["checks"].append({
        "name": "kernel error non-increasing in width",
        "passed": bool(monotone),
        "detail": ", ".join(f"B={b}: {errs[b]:.4f}" for b in sorted(errs)),
    })
    if 1000 in errs:
        report["checks"].append({
            "name": "kernel error at B=1000 <= 0.05",
            "passed": bool(errs[1000] <= 0.05),
            "detail": f"{errs[1000]:.4f}",
        })

    r1 = gradcheck_rwfn(trials=gradcheck_trials)
    report["checks"].append({"name": "rwfn gradient vs finite differences",
                             "passed": bool(r1 < 1e-4), "detail": f"max rel err {r1:.2e}"})
    r2 = gradcheck_ntn(trials=gradcheck_trials)
    report["checks"].append({"name": "ntn gradient vs finite differences",
                             "passed": bool(r2 < 1e-4), "detail": f"max rel err {r2:.2e}"})

    report["passed"] = all(c["passed"] for c in report["checks"])
    return report
