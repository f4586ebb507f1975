"""Self-check suites run by ``qpa verify``.

Each suite returns a dict with a ``passed`` flag and the measured deviations.
Functions are looked up on their modules at call time so a patched map is
actually exercised.
"""
from __future__ import annotations

import numpy as np

from . import circuit_oracle, qpa_map

ORACLE_TOL = 1e-12
FIXED_POINT_TOL = 1e-15


def oracle_equivalence(samples: int = 100, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    pts = qpa_map.sample_simplex(rng, samples)
    dev_state = dev_prob = 0.0
    for row in pts:
        ana = qpa_map.step_identical(row)
        orc = circuit_oracle.oracle_step_bell_diagonal(row)
        dev_state = max(dev_state, float(np.max(np.abs(ana.state.as_array() - orc.state.as_array()))))
        dev_prob = max(dev_prob, abs(ana.success_prob - orc.success_prob))
    return {
        "samples": samples,
        "max_state_deviation": dev_state,
        "max_success_prob_deviation": dev_prob,
        "tolerance": ORACLE_TOL,
        "passed": dev_state < ORACLE_TOL and dev_prob < ORACLE_TOL,
    }


def fixed_points() -> dict:
    res = {}
    for name, bd in (("pure", (1.0, 0.0, 0.0, 0.0)), ("uniform", (0.25, 0.25, 0.25, 0.25))):
        out = qpa_map.step_identical(bd).state.as_array()
        res[name] = float(np.max(np.abs(out - np.array(bd))))
    return {
        "residuals": res,
        "tolerance": FIXED_POINT_TOL,
        "passed": all(v < FIXED_POINT_TOL for v in res.values()),
    }


def threshold_preservation(samples: int = 10_000, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    pts = qpa_map.sample_simplex(rng, samples, min_fidelity=0.5)
    images = np.array([qpa_map.step_identical(row).state.a for row in pts])
    violations = int(np.sum(images <= 0.5))
    return {
        "samples": samples,
        "violations": violations,
        "min_image_fidelity": float(images.min()),
        "passed": violations == 0,
    }


def convergence_scan(samples: int = 10_000, seed: int = 0,
                     fid_tol: float = qpa_map.DEFAULT_FID_TOL) -> dict:
    report = qpa_map.fixed_point_scan(samples, seed, fid_tol=fid_tol)
    out = report.to_dict()
    out["passed"] = report.ok
    return out


def run_all(samples: int = 10_000, oracle_samples: int = 100, seed: int = 0,
            fid_tol: float = qpa_map.DEFAULT_FID_TOL) -> dict:
    suites = {
        "oracle_equivalence": oracle_equivalence(oracle_samples, seed),
        "fixed_points": fixed_points(),
        "threshold_preservation": threshold_preservation(samples, seed),
        "convergence_scan": convergence_scan(samples, seed, fid_tol),
    }
    failed = [name for name, r in suites.items() if not r["passed"]]
    return {"seed": seed, "suites": suites, "failed": failed, "passed": not failed}
