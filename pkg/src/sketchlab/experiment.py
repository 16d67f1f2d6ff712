"""Reproducible experiment runs: sweep sketch sizes, record bounds and rates.

A run is fully determined by its configuration (including the seed): every
random quantity is drawn from a purpose-tagged substream, so re-running
reproduces the result file bit for bit except for wall-clock fields.
"""

import csv
import json
import time
from dataclasses import dataclass, field
from typing import List, Optional, Union

from .bounds import measurement_threshold, success_probability_bound
from .distinguishers import evaluate_estimator, plugin_estimator, two_level_lr_estimator
from .divergence import mixture_from_sketch
from .hard_instance import derive_params
from .rng import substream
from .sketch_linalg import make_orthonormal_sketch, small_column_set

RESULT_FIELDS = [
    "m",
    "chi2_exact",
    "tv_upper",
    "success_ceiling",
    "lr_success",
    "lr_se",
    "plugin_success",
    "plugin_se",
    "gram_exp_lhs",
    "gram_exp_rhs",
    "gram_exp_holds",
    "wall_time",
]


@dataclass
class ExperimentConfig:
    """Parameters of one experiment run."""

    n: int = 4096
    p: float = 4.0
    eps: Optional[float] = None
    seed: int = 0
    trials: int = 10_000
    m_list: Union[str, List[int]] = "auto"
    conditioning: str = "analytic"
    out: Optional[str] = None
    fmt: str = "json"

    def __post_init__(self):
        if self.trials < 100:
            raise ValueError("trials must be at least 100")
        if self.conditioning not in ("analytic", "monte_carlo"):
            raise ValueError(f"unknown conditioning mode {self.conditioning!r}")
        if self.fmt not in ("json", "csv"):
            raise ValueError(f"unknown output format {self.fmt!r}")
        if self.m_list != "auto":
            ms = [int(m) for m in self.m_list]
            if any(m < 1 or m > self.n for m in ms):
                raise ValueError("every m must satisfy 1 <= m <= n")
            self.m_list = ms

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "eps": self.eps,
            "seed": self.seed,
            "trials": self.trials,
            "m_list": self.m_list,
            "conditioning": self.conditioning,
            "fmt": self.fmt,
        }


def resolve_m_list(config: ExperimentConfig) -> List[int]:
    """Explicit list, or doubling sweep from the threshold up to ``n``."""
    if config.m_list != "auto":
        return sorted(set(config.m_list))
    params = derive_params(config.n, config.p, config.eps)
    m = max(1, measurement_threshold(params.n, params.p, params.eps))
    ms = []
    while m < config.n:
        ms.append(m)
        m *= 2
    ms.append(config.n)
    return sorted(set(ms))


@dataclass
class ExperimentRow:
    m: int
    chi2_exact: float
    tv_upper: float
    success_ceiling: float
    lr_success: float
    lr_se: float
    plugin_success: float
    plugin_se: float
    gram_exp_lhs: float
    gram_exp_rhs: float
    gram_exp_holds: bool
    wall_time: float = field(compare=False)

    def to_json_dict(self) -> dict:
        return {name: getattr(self, name) for name in RESULT_FIELDS}


def _run_single_m(config: ExperimentConfig, params, m: int) -> ExperimentRow:
    start = time.perf_counter()
    sketch = make_orthonormal_sketch(m, config.n, config.seed)
    report = success_probability_bound(
        sketch, params,
        conditioning=config.conditioning,
        trials=config.trials,
        rng=substream(config.seed, "conditioning-mc", m),
    )
    mix = mixture_from_sketch(sketch, small_column_set(sketch), params)
    lr_rate, lr_se = evaluate_estimator(
        two_level_lr_estimator(mix, params), params, sketch, config.trials,
        substream(config.seed, "lr-eval", m))
    plugin_rate, plugin_se = evaluate_estimator(
        plugin_estimator, params, sketch, config.trials,
        substream(config.seed, "plugin-eval", m))
    return ExperimentRow(
        m=m,
        chi2_exact=report.gram_exp_lhs - 1.0,
        tv_upper=report.tv_mixture,
        success_ceiling=report.success_ceiling,
        lr_success=lr_rate,
        lr_se=lr_se,
        plugin_success=plugin_rate,
        plugin_se=plugin_se,
        gram_exp_lhs=report.gram_exp_lhs,
        gram_exp_rhs=report.gram_exp_rhs,
        gram_exp_holds=bool(report.gram_exp_lhs <= report.gram_exp_rhs * (1 + 1e-9)),
        wall_time=time.perf_counter() - start,
    )


def run_experiment(config: ExperimentConfig) -> dict:
    """Run the sweep and return ``{"config": ..., "results": [...]}``."""
    params = derive_params(config.n, config.p, config.eps)
    rows = [_run_single_m(config, params, m) for m in resolve_m_list(config)]
    return {
        "config": config.to_json_dict(),
        "results": [row.to_json_dict() for row in rows],
    }


def result_to_json(result: dict) -> str:
    return json.dumps(result, indent=2)


def result_to_csv(result: dict) -> str:
    """One header row plus one data row per m, in round-trip float precision."""
    out = []
    writer = csv.writer(_ListWriter(out))
    writer.writerow(RESULT_FIELDS)
    for row in result["results"]:
        writer.writerow([_csv_cell(row[name]) for name in RESULT_FIELDS])
    return "".join(out)


class _ListWriter:
    def __init__(self, sink):
        self.sink = sink

    def write(self, data):
        self.sink.append(data)


def _csv_cell(value):
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    return value


def write_result(result: dict, path: str, fmt: str):
    text = result_to_json(result) if fmt == "json" else result_to_csv(result)
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(text)
        if fmt == "json":
            fh.write("\n")
