"""Detection pipelines: trigger application, clean-vs-triggered comparison,
distribution comparison, and the network x trigger battery with ROC scoring.

Clean and triggered measurements reuse the same cloud noise streams (paired
sampling), which lowers Monte Carlo variance in the two-sample tests; the
permutation option in `stats` remains the guard where the tests' independence
assumptions matter.
"""

from dataclasses import dataclass, field

import numpy as np

from .io import TriggerSpec
from .measure import MeasureConfig, WobblinessDistribution, compatible_metas, measure_points
from .oracle import OracleError, open_oracle
from .stats import RocCurve, TESTS, TestResult, boxplot_summary, remove_outliers, roc_auc

TEST_NAMES = ("levene", "fligner", "ks")


def apply_trigger(x, trigger: TriggerSpec) -> np.ndarray:
    """Overlay: x' = (1-mask) * x + mask * pattern (idempotent).
    Additive: x' = clamp(x + mask * pattern, [0, 1])."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.shape[-1] != trigger.dim:
        raise ValueError(f"input dim {arr.shape[-1]} does not match trigger dim {trigger.dim}")
    mask = trigger.mask.astype(np.float64)
    pattern = trigger.pattern.astype(np.float64)
    if trigger.mode == "overlay":
        return (1.0 - mask) * arr + mask * pattern
    return np.clip(arr + mask * pattern, 0.0, 1.0)


@dataclass
class DetectionReport:
    trigger_id: str
    tests: dict  # test name -> TestResult
    clean: WobblinessDistribution
    triggered: WobblinessDistribution
    sigma: float

    def is_backdoor(self, test: str = "levene", alpha: float = 0.01) -> bool:
        return self.tests[test].p_value < alpha

    def to_json(self) -> dict:
        return {
            "trigger_id": self.trigger_id,
            "sigma": self.sigma,
            "tests": {name: r.to_json() for name, r in self.tests.items()},
            "clean": self.clean.to_json(),
            "triggered": self.triggered.to_json(),
        }


@dataclass
class ComparisonReport:
    tests: dict
    summary_1: "object"
    summary_2: "object"
    meta_1: dict
    meta_2: dict
    iqr_1: float
    iqr_2: float

    def to_json(self) -> dict:
        return {
            "tests": {name: r.to_json() for name, r in self.tests.items()},
            "summary_1": self.summary_1.to_json(),
            "summary_2": self.summary_2.to_json(),
            "meta_1": self.meta_1,
            "meta_2": self.meta_2,
            "iqr_1": self.iqr_1,
            "iqr_2": self.iqr_2,
        }


def _run_tests(a, b, drop_outliers: bool, tests, method: str, n_permutations: int) -> dict:
    if drop_outliers:
        a_used, b_used = remove_outliers(a), remove_outliers(b)
        removed = len(a_used) < len(a) or len(b_used) < len(b)
    else:
        a_used, b_used, removed = a, b, False
    out = {}
    for name in tests:
        result: TestResult = TESTS[name](a_used, b_used, method=method,
                                         n_permutations=n_permutations)
        result.outliers_removed = removed
        out[name] = result
    return out


def backdoor_test(handle, points, trigger: TriggerSpec, cfg: MeasureConfig,
                  drop_outliers: bool = False, trigger_id: str = "trigger",
                  tests=TEST_NAMES, method: str = "asymptotic",
                  n_permutations: int = 10000) -> DetectionReport:
    """Measure W over clean and triggered versions of the same test points
    (paired noise streams) and test whether the spreads differ. A small
    p-value means the candidate behaves like an implanted backdoor."""
    X = np.asarray(points, dtype=np.float64)
    if X.shape[0] < 2:
        raise ValueError("backdoor_test needs at least 2 test points")
    clean = measure_points(handle, X, cfg, meta_extra={"role": "clean"})
    triggered = measure_points(handle, apply_trigger(X, trigger), cfg,
                               meta_extra={"role": "triggered", "trigger": trigger_id})
    results = _run_tests(clean.values, triggered.values, drop_outliers,
                         tests, method, n_permutations)
    return DetectionReport(trigger_id=trigger_id, tests=results, clean=clean,
                           triggered=triggered, sigma=cfg.noise.sigma)


def compare_distributions(d1: WobblinessDistribution, d2: WobblinessDistribution,
                          drop_outliers: bool = False, tests=TEST_NAMES,
                          method: str = "asymptotic", n_permutations: int = 10000
                          ) -> ComparisonReport:
    """Boxplot summaries plus all tests for two comparable distributions."""
    if not compatible_metas(d1.meta, d2.meta):
        raise ValueError(
            f"incompatible metas: {d1.meta} vs {d2.meta} (sigma/n/kind/c/clip must match)"
        )
    s1, s2 = boxplot_summary(d1.values), boxplot_summary(d2.values)
    results = _run_tests(d1.values, d2.values, drop_outliers, tests, method, n_permutations)
    return ComparisonReport(
        tests=results, summary_1=s1, summary_2=s2,
        meta_1=dict(d1.meta), meta_2=dict(d2.meta),
        iqr_1=s1.q75 - s1.q25, iqr_2=s2.q75 - s2.q25,
    )


@dataclass
class BatteryResult:
    cells: list = field(default_factory=list)
    rocs: dict = field(default_factory=dict)  # test name -> RocCurve

    def to_json(self) -> dict:
        return {
            "cells": self.cells,
            "rocs": {name: roc.to_json() for name, roc in self.rocs.items()},
            "auc": {name: roc.auc for name, roc in self.rocs.items()},
        }


def run_battery(networks, triggers, points, cfg: MeasureConfig,
                drop_outliers: bool = False, tests=TEST_NAMES,
                method: str = "asymptotic", n_permutations: int = 10000,
                max_batch: int | None = None) -> BatteryResult:
    """Full cross product of backdoor_test over networks and triggers.

    `networks`: list of dicts {"id": str, "spec": transport, "poisoned": bool,
    "trigger": optional trigger id}. A cell's ground truth is True when the
    network is poisoned with exactly that trigger if the implanted trigger id
    is recorded, otherwise the network's poisoned flag. Unreachable oracles
    mark their cells failed; failed cells are excluded from the ROC.
    """
    if len(networks) < 2:
        raise ValueError("battery needs at least 2 networks")
    if len(triggers) < 1:
        raise ValueError("battery needs at least 1 trigger")
    result = BatteryResult()
    for net in networks:
        net_id = net.get("id", net["spec"])
        handle = None
        try:
            handle = open_oracle(net["spec"], max_batch=max_batch)
        except OracleError as exc:
            for trig_id, _ in triggers:
                result.cells.append({
                    "network": net_id, "trigger": trig_id,
                    "implanted": _cell_truth(net, trig_id),
                    "failed": True, "error": str(exc), "p_values": {},
                })
            continue
        try:
            for trig_id, trig in triggers:
                cell = {"network": net_id, "trigger": trig_id,
                        "implanted": _cell_truth(net, trig_id), "failed": False}
                try:
                    report = backdoor_test(
                        handle, points, trig, cfg, drop_outliers=drop_outliers,
                        trigger_id=trig_id, tests=tests, method=method,
                        n_permutations=n_permutations,
                    )
                    cell["p_values"] = {n: r.p_value for n, r in report.tests.items()}
                except OracleError as exc:
                    cell["failed"] = True
                    cell["error"] = str(exc)
                    cell["p_values"] = {}
                result.cells.append(cell)
        finally:
            handle.close()
    ok = [c for c in result.cells if not c["failed"]]
    for name in tests:
        scores = [c["p_values"][name] for c in ok]
        truth = [c["implanted"] for c in ok]
        result.rocs[name] = roc_auc(scores, truth)
    return result


def _cell_truth(net: dict, trig_id: str) -> bool:
    if not net.get("poisoned", False):
        return False
    implanted = net.get("trigger")
    if implanted is None:
        return True
    return implanted == trig_id
