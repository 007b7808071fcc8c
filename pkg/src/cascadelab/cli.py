"""Batch driver: read a flat ``key = value`` config, run one task, write a table.

Exit codes: 0 success, 2 configuration or output error, 3 numerical failure,
4 perturbation conditions not numerically verifiable.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import asymptotics, exact, montecarlo, perturbation, regimes
from .model import CapacityDistribution, LoadSurgeFunction, ModelFamily, ThresholdSpec

log = logging.getLogger("cascadelab")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_UNVERIFIABLE = 0, 2, 3, 4
TASKS = ("exact", "asymptotic", "perturb", "simulate", "classify", "compare")


class ConfigError(ValueError):
    pass


# -- config -------------------------------------------------------------------


def parse_config(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines are ignored."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


@dataclass
class ExperimentConfig:
    values: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls(parse_config(text))

    def has(self, key: str) -> bool:
        return key in self.values

    def get(self, key: str, default: Any = None) -> str:
        if key in self.values:
            return self.values[key]
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default

    def num(self, key: str, default: float | None = None) -> float:
        raw = self.get(key, None if default is None else repr(default))
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key} must be a number, got {raw!r}") from None

    def int(self, key: str, default: int | None = None) -> int:
        value = self.num(key, None if default is None else float(default))
        if value != int(value):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        return int(value)

    def int_list(self, key: str) -> list[int]:
        try:
            return [int(float(x)) for x in self.get(key).split(",") if x.strip()]
        except ValueError:
            raise ConfigError(f"{key} must be a comma-separated list of integers") from None

    @property
    def task(self) -> str:
        task = self.get("task")
        if task not in TASKS:
            raise ConfigError(f"task must be one of {', '.join(TASKS)}; got {task!r}")
        return task

    @property
    def N(self) -> int:
        n = self.int("model.N")
        if n < 2:
            raise ConfigError(f"model.N must be at least 2, got {n}")
        return n

    def family(self) -> ModelFamily:
        try:
            kind = self.get("model.capacity", "uniform")
            if kind == "uniform":
                capacity = CapacityDistribution.uniform()
            elif kind == "exponential":
                capacity = CapacityDistribution.exponential(self.num("capacity.rate", 1.0))
            elif kind == "table":
                knots = [tuple(float(v) for v in pair.split(":")) for pair in self.get("capacity.knots").split(",")]
                capacity = CapacityDistribution.table(knots)
            else:
                raise ConfigError(f"unknown model.capacity {kind!r}")
            kind = self.get("surge.kind")
            if kind == "affine":
                surge = LoadSurgeFunction.affine(self.num("surge.theta"), self.num("surge.lambda", 1.0))
            elif kind == "redistribution":
                surge = LoadSurgeFunction.redistribution(self.num("surge.a", 1.0))
            elif kind == "table":
                surge = LoadSurgeFunction.table([float(v) for v in self.get("surge.values").split(",")])
            else:
                raise ConfigError(f"unknown surge.kind {kind!r}")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return ModelFamily(capacity, surge)

    def theta(self, family: ModelFamily | None = None) -> float | None:
        if self.has("theta"):
            theta = self.num("theta")
        elif family is not None and family.surge.kind == "affine":
            theta = family.surge.theta
        else:
            return None
        if not theta > 0:
            raise ConfigError(f"theta must be positive, got {theta}")
        return theta

    def threshold(self) -> ThresholdSpec:
        kind = self.get("threshold.kind")
        try:
            if kind == "fixed":
                return ThresholdSpec.fixed(self.int("threshold.k"))
            if kind == "proportional":
                return ThresholdSpec.proportional(self.num("threshold.alpha"))
            if kind == "power":
                return ThresholdSpec.power(self.num("threshold.c", 1.0), self.num("threshold.gamma"))
            if kind == "complement":
                return ThresholdSpec.complement(self.int("threshold.l"))
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        raise ConfigError(f"unknown threshold.kind {kind!r}")

    def thresholds_at(self, N: int) -> list[int]:
        """Explicit ``thresholds = k1, k2, ...`` or the threshold family evaluated at ``N``."""
        if self.has("thresholds"):
            ks = self.int_list("thresholds")
        else:
            try:
                ks = [self.threshold()(N)]
            except ValueError as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(str(exc)) from exc
        if not ks:
            raise ConfigError("no thresholds given")
        return ks

    def n_grid(self, default: Sequence[int]) -> list[int]:
        return self.int_list("model.N_grid") if self.has("model.N_grid") else list(default)


# -- output -------------------------------------------------------------------


def format_value(value: Any) -> str:
    """Shortest decimal string that round-trips to the same double."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return np.format_float_positional(x, unique=True, trim="0")
    return str(value)


def _json_value(value: Any) -> Any:
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        x = float(value)
        return x if math.isfinite(x) else format_value(x)
    return value


def emit(rows: Sequence[dict], fmt: str = "csv", path: str | Path | None = None, columns: Sequence[str] | None = None) -> str:
    """Write ``rows`` as CSV or JSON to ``path`` (stdout when ``None`` or ``-``)."""
    if columns is None:
        if not rows:
            raise ValueError("emit needs column names when there are no rows")
        columns = list(rows[0].keys())
    columns = list(columns)
    if not columns:
        raise ValueError("emit needs a non-empty header")
    for row in rows:
        if list(row.keys()) != columns:
            raise ValueError("every row must carry the header's keys in order")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row[c]) for c in columns])
        text = buf.getvalue()
    elif fmt == "json":
        text = json.dumps([{c: _json_value(row[c]) for c in columns} for row in rows], indent=1) + "\n"
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)
    return text


# -- tasks --------------------------------------------------------------------


def _require_affine_critical(family: ModelFamily) -> float:
    s = family.surge
    if family.capacity.kind != "uniform" or s.kind != "affine" or s.lam != 1.0:
        raise ConfigError("this task needs uniform capacities with an affine surge of lambda = 1")
    return s.theta


def task_exact(cfg: ExperimentConfig) -> list[dict]:
    theta = _require_affine_critical(cfg.family())
    N = cfg.N
    pmf = np.exp(exact.quasi_binomial_log_pmf_all(N, theta))
    tail = exact.quasi_binomial_exceedance_all(N, theta)
    return [{"k": k, "pmf": float(pmf[k]), "exceedance": float(tail[k])} for k in range(N + 1)]


def task_asymptotic(cfg: ExperimentConfig) -> list[dict]:
    theta = _require_affine_critical(cfg.family())
    N = cfg.N
    params = exact.QuasiBinomialParams(N, theta)
    rows = []
    for k in cfg.thresholds_at(N):
        if not 1 <= k < N:
            raise ConfigError(f"threshold {k} must lie in 1..N-1")
        rows.append(
            {
                "k": k,
                "exact_pmf": float(exact.quasi_binomial_pmf(params, k)),
                "affine_pmf_approx": asymptotics.affine_pmf_approx(N, theta, k),
                "branching_pmf_approx": asymptotics.branching_pmf_approx(theta, k),
                "exact_exceedance": exact.quasi_binomial_exceedance(params, k),
                "affine_exceedance_approx": asymptotics.affine_exceedance_approx(N, theta, k),
                "constant_probe": asymptotics.pmf_constant_probe(N, theta, k),
            }
        )
    return rows


def task_compare(cfg: ExperimentConfig) -> list[dict]:
    family = cfg.family()
    theta = _require_affine_critical(family)
    N = cfg.N
    params = exact.QuasiBinomialParams(N, theta)
    with_mc = cfg.has("mc.replications")
    rows = []
    for k in cfg.thresholds_at(N):
        if not 1 <= k < N:
            raise ConfigError(f"threshold {k} must lie in 1..N-1")
        ex = exact.quasi_binomial_exceedance(params, k)
        approx = asymptotics.affine_exceedance_approx(N, theta, k)
        row = {
            "N": N,
            "theta": theta,
            "k": k,
            "exact_exceedance": ex,
            "approx_exceedance": approx,
            "relative_gap": abs(approx - ex) / ex,
            "scaled_exceedance": ex * math.sqrt(k * N / (N - k)),
            "limit_constant": 2.0 * theta / asymptotics.SQRT_2PI,
        }
        if with_mc:
            res = montecarlo.estimate_exceedance(family.at(N), k, *_mc_args(cfg))
            row["mc_estimate"] = res.estimate
            row["mc_std_error"] = res.std_error
        rows.append(row)
    return rows


def _mc_args(cfg: ExperimentConfig) -> tuple[int, int, int]:
    reps = cfg.int("mc.replications")
    if reps < 100:
        raise ConfigError("mc.replications must be at least 100")
    seed = cfg.int("mc.seed", 0)
    if seed < 0:
        raise ConfigError("mc.seed must be non-negative")
    workers = cfg.int("mc.workers", 1)
    if workers < 1:
        raise ConfigError("mc.workers must be positive")
    return reps, seed, workers


def task_simulate(cfg: ExperimentConfig) -> list[dict]:
    model = cfg.family().at(cfg.N)
    ks = cfg.thresholds_at(model.N)
    if any(not 0 <= k <= model.N for k in ks):
        raise ConfigError(f"thresholds must lie in 0..{model.N}")
    reps, seed, workers = _mc_args(cfg)
    results = montecarlo.exceedance_curve(model, ks, reps, seed, workers)
    log.info("simulation took %.2fs (%s kernel)", results[0].wall_time if results else 0.0, montecarlo.KERNEL)
    return [
        {
            "k": k,
            "estimate": r.estimate,
            "std_error": r.std_error,
            "ci_lo": r.ci95[0],
            "ci_hi": r.ci95[1],
            "successes": r.successes,
            "replications": r.replications,
            "seed": r.seed,
        }
        for k, r in zip(ks, results)
    ]


def task_classify(cfg: ExperimentConfig) -> list[dict]:
    family = cfg.family()
    report = regimes.classify_threshold(
        family,
        cfg.threshold(),
        theta=cfg.num("theta") if cfg.has("theta") else None,
        probe_grid=cfg.n_grid(regimes.DEFAULT_PROBE_GRID),
        tolerance=cfg.num("classify.tolerance", 0.05),
    )
    return report.rows()


def task_perturb(cfg: ExperimentConfig) -> list[dict]:
    family = cfg.family()
    theta = cfg.theta(family)
    profile = perturbation.PerturbationProfile.from_family(family, theta)
    delta = cfg.num("alg1.delta", 0.01)
    if not delta > 0:
        raise ConfigError("alg1.delta must be positive")
    k_spec = cfg.threshold() if cfg.has("threshold.kind") else None
    res = perturbation.v_limit(
        profile,
        k_spec,
        delta,
        probe_grid=cfg.n_grid((10**3, 10**4, 10**5, 10**6)),
        m_cap=cfg.int("alg1.m_cap", 200),
        force=cfg.get("alg1.force", "false").lower() == "true",
    )
    return [
        {
            "theta": profile.theta,
            "delta_target": delta,
            "eps": res.eps,
            "m_eps": res.m_eps,
            "n_eps": res.n_eps,
            "bound": res.bound,
            "v_value": res.value,
            "v_lo": res.interval[0],
            "v_hi": res.interval[1],
        }
    ]


TASK_RUNNERS = {
    "exact": task_exact,
    "asymptotic": task_asymptotic,
    "compare": task_compare,
    "simulate": task_simulate,
    "classify": task_classify,
    "perturb": task_perturb,
}


def run(cfg: ExperimentConfig) -> int:
    """Run the configured task and write its table; returns the exit status."""
    try:
        rows = TASK_RUNNERS[cfg.task](cfg)
        fmt = cfg.get("output.format", "csv")
        if fmt not in ("csv", "json"):
            raise ConfigError(f"output.format must be csv or json, got {fmt!r}")
        emit(rows, fmt, cfg.get("output.path", "-"))
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except perturbation.ConditionsNotVerifiable as exc:
        log.error("conditions not numerically verifiable: %s", exc)
        return EXIT_UNVERIFIABLE
    except (ArithmeticError, FloatingPointError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except OSError as exc:
        log.error("cannot write output: %s", exc)
        return EXIT_CONFIG
    except ValueError as exc:
        log.error("invalid parameters: %s", exc)
        return EXIT_CONFIG
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cascadelab", description=__doc__.splitlines()[0])
    parser.add_argument("--config", required=True, help="experiment config (key = value lines)")
    parser.add_argument("--output", help="output path, '-' for stdout (overrides output.path)")
    parser.add_argument("--format", choices=("csv", "json"), help="output format (overrides output.format)")
    parser.add_argument("--seed", type=int, help="Monte Carlo seed (overrides mc.seed)")
    parser.add_argument("--workers", type=int, help="Monte Carlo worker threads (overrides mc.workers)")
    parser.add_argument("--verbose", "-v", action="store_true")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = ExperimentConfig.from_file(args.config)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    overrides = {"output.path": args.output, "output.format": args.format, "mc.seed": args.seed, "mc.workers": args.workers}
    for key, value in overrides.items():
        if value is not None:
            cfg.values[key] = str(value)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
