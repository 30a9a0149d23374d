"""
Seeded Monte-Carlo sweeps over transmit power or interfering-link path loss.

Every channel draw and every initialization has its own seed derived from
``(master_seed, axis_index, realization_index[, init_index])`` through
:class:`numpy.random.SeedSequence`, so output does not depend on chunking,
worker count or execution order. Within a chunk, all realizations and
initializations are stacked and solved as one batch.
"""

import contextlib
import csv
import dataclasses
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List

import numpy as np

from . import metrics, updates
from .exceptions import ContractViolation
from .network import (Interferer, NetworkConfig, draw_realization,
                      stack_realizations)
from .solvers import AlgorithmKind, make_solver

logger = logging.getLogger(__name__)

__all__ = [
    "SweepSpec",
    "SweepRecord",
    "preset",
    "PRESETS",
    "parse_algorithm",
    "run_sweep",
    "summarize",
    "write_records",
    "read_records",
    "write_summary",
]

ALL_ALGORITHMS = ["IterIA", "MinINL", "JointMMSE", "MaxSINR", "ApproxMaxSINR",
                  "Greedy", "RandomBF", "ClosedFormIA3"]
_CHANNEL_STREAM = 0
_INIT_STREAM = 1


@dataclass
class SweepSpec:
    """One Monte-Carlo experiment.

    ``algorithms`` entries are algorithm names, optionally suffixed with
    ``@N`` to override the iteration count for that entry (for example
    ``"JointMMSE@500"``). ``axis`` is ``"rho_db"`` (all transmit powers, and
    a tracking interferer) or ``"alpha_db"`` (interfering-link path loss).
    """
    scenario: str
    config: NetworkConfig
    algorithms: List[str]
    axis: str = "rho_db"
    axis_start: float = 0.0
    axis_stop: float = 40.0
    axis_step: float = 5.0
    realizations: int = 1000
    iterations: int = 100
    inits: int = 5
    master_seed: int = 0
    epsilon: float = 1e-8
    keep_all_inits: bool = False
    common_draws: bool = False
    chunk_size: int = 250

    def __post_init__(self):
        if self.axis not in ("rho_db", "alpha_db"):
            raise ContractViolation(f"unknown sweep axis {self.axis!r}")
        if not self.axis_step > 0:
            raise ContractViolation("axis_step must be > 0")
        if self.realizations < 1 or self.inits < 1 or self.iterations < 1:
            raise ContractViolation("realizations, inits and iterations must be >= 1")
        if self.axis_stop < self.axis_start:
            raise ContractViolation("axis_stop < axis_start")
        for a in self.algorithms:
            parse_algorithm(a)

    @property
    def axis_values(self):
        n = int(math.floor((self.axis_stop - self.axis_start) / self.axis_step + 1e-9)) + 1
        return [round(self.axis_start + i * self.axis_step, 10) for i in range(n)]

    def config_at(self, value):
        if self.axis == "rho_db":
            return self.config.with_rho_db(value)
        return self.config.with_cross_alpha_db(value)


@dataclass
class SweepRecord:
    """One output row: the best initialization of one algorithm on one
    channel draw. Failed runs carry ``error`` and NaN numbers."""
    scenario: str
    algorithm: str
    axis_value_db: float
    realization_index: int
    best_init_index: int
    iterations_run: int
    sum_rate_bits: float
    final_objective: float
    error: str = ""


FIELDS = [f.name for f in dataclasses.fields(SweepRecord)]


def parse_algorithm(token):
    """``"JointMMSE@500"`` -> ``(AlgorithmKind.JointMMSE, 500)``."""
    name, at, iters = token.partition("@")
    try:
        kind = AlgorithmKind(name)
    except ValueError:
        raise ContractViolation(f"unknown algorithm {name!r}; choose from "
                                f"{', '.join(k.value for k in AlgorithmKind)}") from None
    if at:
        if not iters.isdigit() or int(iters) < 1:
            raise ContractViolation(f"bad iteration override in {token!r}")
        return kind, int(iters)
    return kind, None


# -- presets -------------------------------------------------------------------

def _base(interferer=None, rho_db=0.0):
    return NetworkConfig.symmetric(K=3, M=2, N=2, S=1, rho_db=rho_db,
                                   noise_sigma2=1.0, interferer=interferer)


def _fig3():
    return SweepSpec("fig3", _base(), ALL_ALGORITHMS, axis_start=10, axis_stop=40,
                     axis_step=30, realizations=1, inits=10, keep_all_inits=True,
                     common_draws=True)


def _fig4():
    itf = Interferer(rho_e=1.0, alpha_e=1.0, track_rho=True)
    return SweepSpec("fig4", _base(itf), ALL_ALGORITHMS)


def _fig5(rho_e_db=0.0):
    itf = Interferer(rho_e=10 ** (rho_e_db / 10), alpha_e=1.0)
    return SweepSpec("fig5", _base(itf), ALL_ALGORITHMS + ["JointMMSE@500"])


def _fig6():
    itf = Interferer(rho_e=1.0, alpha_e=[1.0, 0.0, 0.0], track_rho=True)
    return SweepSpec("fig6", _base(itf), ALL_ALGORITHMS)


def _fig7():
    return SweepSpec("fig7", _base(rho_db=40.0), ALL_ALGORITHMS, axis="alpha_db",
                     axis_start=-30.0, axis_stop=0.0, common_draws=True)


PRESETS = {"fig3": _fig3, "fig4": _fig4, "fig5": _fig5, "fig6": _fig6, "fig7": _fig7}


def preset(name, **overrides):
    """Scenario presets for the (2,2,3) channel with one stream per user.

    Keyword overrides replace any :class:`SweepSpec` field.

    ``fig3``: one draw, 10 initializations, 10 and 40 dB, all initializations
    reported. ``fig4``: rank-one interferer whose power tracks the swept
    power. ``fig5``: interferer at fixed ``rho_e_db`` (default 0 dB); joint
    MMSE also at 500 iterations. ``fig6``: tracking interferer heard only at
    receiver 1. ``fig7``: no interferer, direct-link SNR 40 dB, sweep of the
    interfering-link path loss from -30 to 0 dB on common
    channel draws (only the path loss changes between axis points).
    """
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ContractViolation(f"unknown preset {name!r}; choose from "
                                f"{', '.join(PRESETS)}") from None
    if name == "fig5":
        spec = factory(overrides.pop("rho_e_db", 0.0))
    else:
        spec = factory()
    return dataclasses.replace(spec, **overrides)


# -- execution ----------------------------------------------------------------------

def _seed(*key):
    return np.random.SeedSequence([int(k) for k in key])


def _channel_seed(spec, axis_index, r):
    return _seed(spec.master_seed, _CHANNEL_STREAM,
                 0 if spec.common_draws else axis_index, r)


def _init_seed(spec, axis_index, r, i):
    return _seed(spec.master_seed, _INIT_STREAM, axis_index, r, i)


def _draw_chunk(spec, cfg, axis_index, indices):
    reals = [draw_realization(cfg, np.random.default_rng(_channel_seed(spec, axis_index, r)))
             for r in indices]
    real = stack_realizations(reals)
    inits = [[updates.random_orthonormal_precoders(
                  cfg, np.random.default_rng(_init_seed(spec, axis_index, r, i)))
              for i in range(spec.inits)] for r in indices]
    F0 = [np.stack([np.stack([inits[a][i][l] for i in range(spec.inits)])
                    for a in range(len(indices))])
          for l in range(cfg.K)]
    rbf = [[updates.random_beamforming(
                cfg, np.random.default_rng(_seed(spec.master_seed, _INIT_STREAM, axis_index,
                                                 r, i, 1)))
            for i in range(spec.inits)] for r in indices]
    F_rbf = [np.stack([np.stack([rbf[a][i][l] for i in range(spec.inits)])
                       for a in range(len(indices))])
             for l in range(cfg.K)]
    return real, F0, F_rbf


def _solve(kind, iters, spec, real, F0, F_rbf):
    """Fit one algorithm on a (realizations, inits) batch; returns rate,
    objective and iteration arrays of shape (R, I)."""
    est = make_solver(kind, max_iter=iters, tol=spec.epsilon)
    if kind is AlgorithmKind.RandomBF:
        F = F_rbf
        rate = metrics.sum_rate(real, F)
        return rate, rate, np.zeros(rate.shape, dtype=int)
    est.fit(real, precoders_init=None if kind is AlgorithmKind.ClosedFormIA3 else F0)
    return est.sum_rate(real), est.objective_[-1], est.n_iter_


def _solve_robust(kind, iters, spec, real, F0, F_rbf):
    try:
        return _solve(kind, iters, spec, real, F0, F_rbf) + (None,)
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        logger.info("batch failed for %s (%s); retrying element-wise", kind.value, exc)
    R, I = real.batch_shape
    rate = np.full((R, I), np.nan)
    obj = np.full((R, I), np.nan)
    nit = np.zeros((R, I), dtype=int)
    err = np.full((R, I), "", dtype=object)
    for a in range(R):
        for i in range(I):
            sub = real[a, i]
            try:
                r_, o_, n_ = _solve(kind, iters, spec, sub, [f[a, i] for f in F0],
                                    [f[a, i] for f in F_rbf])
                rate[a, i], obj[a, i], nit[a, i] = r_, o_, n_
            except (ArithmeticError, ValueError, RuntimeError) as exc:
                err[a, i] = f"{type(exc).__name__}: {exc}"
    return rate, obj, nit, err


def _run_chunk(spec, axis_index, indices):
    value = spec.axis_values[axis_index]
    cfg = spec.config_at(value)
    real, F0, F_rbf = _draw_chunk(spec, cfg, axis_index, indices)
    real = real.repeat(spec.inits)
    out = []
    for token in spec.algorithms:
        kind, override = parse_algorithm(token)
        iters = override or spec.iterations
        if kind is AlgorithmKind.Greedy and override is None:
            iters = min(iters, 10)
        rate, obj, nit, err = _solve_robust(kind, iters, spec, real, F0, F_rbf)
        if kind is AlgorithmKind.ClosedFormIA3:
            # deterministic given the channel: one initialization suffices
            rate, obj, nit = rate[:, :1], obj[:, :1], nit[:, :1]
            err = None if err is None else err[:, :1]
        for a, r in enumerate(indices):
            if spec.keep_all_inits:
                chosen = range(rate.shape[1])
            else:
                finite = np.where(np.isfinite(rate[a]), rate[a], -np.inf)
                chosen = [int(np.argmax(finite))]
            for i in chosen:
                msg = "" if err is None else err[a, i]
                out.append(SweepRecord(
                    scenario=spec.scenario, algorithm=token, axis_value_db=float(value),
                    realization_index=int(r), best_init_index=int(i),
                    iterations_run=int(nit[a, i]),
                    sum_rate_bits=float(rate[a, i]) if not msg else math.nan,
                    final_objective=float(obj[a, i]) if not msg else math.nan,
                    error=msg))
    return axis_index, indices[0], out


def _jobs(spec):
    jobs = []
    for ax in range(len(spec.axis_values)):
        for start in range(0, spec.realizations, spec.chunk_size):
            jobs.append((ax, list(range(start, min(start + spec.chunk_size,
                                                   spec.realizations)))))
    return jobs


def run_sweep(spec, workers=1):
    """Run the experiment and yield :class:`SweepRecord` rows.

    Rows come out ordered by axis point, then realization chunk, then
    algorithm (as listed in the spec), then realization. Per-run numeric
    failures become rows with a non-empty ``error``; the sweep continues.
    """
    jobs = _jobs(spec)
    if workers <= 1:
        for ax, idx in jobs:
            yield from _run_chunk(spec, ax, idx)[2]
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_chunk, spec, ax, idx) for ax, idx in jobs]
        for fut in futures:
            yield from fut.result()[2]


def summarize(records):
    """Mean sum rate and standard error per (scenario, algorithm, axis value).

    Failed rows are counted in ``failures`` and excluded from the mean. The
    standard error is the sample standard deviation over ``sqrt(n)``; zero for
    a single row.
    """
    groups = {}
    for rec in records:
        key = (rec.scenario, rec.algorithm, float(rec.axis_value_db))
        groups.setdefault(key, []).append(rec)
    rows = []
    for (scenario, algorithm, axis_value), recs in groups.items():
        vals = np.array([r.sum_rate_bits for r in recs if not r.error], dtype=float)
        n = vals.size
        mean = float(np.mean(vals)) if n else math.nan
        se = float(np.std(vals, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        rows.append({"scenario": scenario, "algorithm": algorithm,
                     "axis_value_db": axis_value, "n": n, "mean_sum_rate_bits": mean,
                     "stderr": se, "failures": len(recs) - n})
    return rows


# -- I/O -------------------------------------------------------------------------------

@contextlib.contextmanager
def _sink(target):
    if hasattr(target, "write"):
        yield target
    else:
        with open(target, "w", newline="") as fh:
            yield fh


def _write_rows(rows, target, fmt, fields):
    with _sink(target) as fh:
        if fmt == "json":
            json.dump(rows, fh, indent=1)
            fh.write("\n")
        elif fmt == "csv":
            writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
        else:
            raise ContractViolation(f"unknown output format {fmt!r}")


def write_records(records, target, fmt="csv"):
    """Write records to a path or text stream as CSV (header row, columns in
    :class:`SweepRecord` field order) or as a JSON list of objects."""
    rows = [dataclasses.asdict(r) for r in records]
    _write_rows(rows, target, fmt, FIELDS)
    return len(rows)


def read_records(path):
    """Read records written by :func:`write_records` (format from the file
    content)."""
    with open(path) as fh:
        text = fh.read()
    if text.lstrip().startswith("["):
        rows = json.loads(text)
    else:
        rows = list(csv.DictReader(text.splitlines()))
    out = []
    for row in rows:
        out.append(SweepRecord(
            scenario=row["scenario"], algorithm=row["algorithm"],
            axis_value_db=float(row["axis_value_db"]),
            realization_index=int(row["realization_index"]),
            best_init_index=int(row["best_init_index"]),
            iterations_run=int(row["iterations_run"]),
            sum_rate_bits=float(row["sum_rate_bits"]),
            final_objective=float(row["final_objective"]),
            error=row.get("error") or ""))
    return out


SUMMARY_FIELDS = ["scenario", "algorithm", "axis_value_db", "n", "mean_sum_rate_bits",
                  "stderr", "failures"]


def write_summary(rows, target, fmt="csv"):
    _write_rows(list(rows), target, fmt, SUMMARY_FIELDS)
