"""Recovery-benchmark grid: (data rank -> subspace rank) x loss x trials.

Each trial draws its own dataset, trains a linear subspace generator
adversarially, and scores the EMA model's basis against PCA of the same
data. Per-trial seeds are derived from (master seed, cell index, trial
index) positions, never from execution order, so sequential and parallel
runs of the same spec agree byte for byte.

Wall-clock numbers are collected for operators but deliberately left out of
the emitted CSV/JSON so outputs of equal-seed runs are identical.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import ContractError, TrainingDiverged
from .generators import init_linear_model
from .losses import LOSS_KINDS
from .metrics import basis_similarity
from .pca import pca_basis
from .subspace import ortho_penalty
from .toydata import DISTRIBUTIONS, make_dataset
from .trainer import TrainConfig, train

__all__ = [
    "BenchSpec", "BenchReport", "CellResult", "run_bench", "emit_table",
    "CANONICAL_PAIRS", "spec_from_dict", "spec_to_dict",
]

CANONICAL_PAIRS = ((5, 1), (5, 3), (10, 1), (10, 3), (10, 5),
                   (20, 1), (20, 5), (20, 10))
FAILURE_FLAG_RATE = 0.2


@dataclass
class BenchSpec:
    grid: list              # (data_rank, subspace_rank) pairs
    losses: list
    dist: str
    trials: int
    ambient: int = 32
    samples: int = 2048
    train: TrainConfig = field(default_factory=TrainConfig)
    master_seed: int = 0

    def __post_init__(self):
        self.grid = [(int(a), int(b)) for a, b in self.grid]
        if not self.grid:
            raise ContractError("grid must be nonempty")
        for data_rank, sub_rank in self.grid:
            if not (sub_rank <= data_rank <= self.ambient):
                raise ContractError(
                    f"need subspace <= data rank <= ambient, got "
                    f"{sub_rank} -> {data_rank} -> {self.ambient}")
        self.losses = list(self.losses)
        for k in self.losses:
            if k not in LOSS_KINDS:
                raise ContractError(f"unknown loss {k!r}")
        if self.dist not in DISTRIBUTIONS:
            raise ContractError(f"unknown distribution {self.dist!r}")
        if self.trials < 1:
            raise ContractError("trials must be at least 1")


@dataclass
class CellResult:
    loss: str
    pair: tuple
    raw: list          # similarity per surviving trial, trial order
    ortho: list        # ||U^T U - I||_F^2 / q per surviving trial
    failures: int
    flagged: bool
    mean: float        # nan when no trial survived
    seconds: float     # in-memory only; never serialized


@dataclass
class BenchReport:
    dist: str
    trials: int
    ambient: int
    samples: int
    master_seed: int
    losses: list
    grid: list
    cells: list  # CellResult, loss-major then grid order


def _trial_seeds(master_seed, cell_index, trial):
    ss = np.random.SeedSequence(master_seed, spawn_key=(cell_index, trial))
    return [int(c.generate_state(1, np.uint64)[0]) for c in ss.spawn(3)]


def _run_trial(job):
    """One (cell, trial) unit; top-level so process pools can ship it."""
    (loss, data_rank, sub_rank, ambient, n_samples, dist,
     cfg, cell_index, trial, master_seed) = job
    t0 = time.perf_counter()
    data_seed, model_seed, train_seed = _trial_seeds(master_seed, cell_index, trial)
    dataset = make_dataset(ambient, data_rank, n_samples, dist, data_seed)
    model = init_linear_model(ambient, sub_rank, np.random.default_rng(model_seed))
    cfg = replace(cfg, loss=loss, seed=train_seed)
    try:
        _, ema, _ = train(model, dataset, cfg)
    except TrainingDiverged as exc:
        return {"ok": False, "error": str(exc),
                "seconds": time.perf_counter() - t0}
    sub = ema.subspace
    sim = basis_similarity(sub.basis(), sub.importances(),
                           pca_basis(dataset.samples, sub_rank))
    return {"ok": True, "similarity": sim.mean,
            "ortho": ortho_penalty(sub.basis()) / sub_rank,
            "seconds": time.perf_counter() - t0}


def run_bench(spec: BenchSpec, workers: int | None = None) -> BenchReport:
    """Run every (loss, pair, trial) and aggregate.

    workers > 1 fans trials out to a process pool; results are identical to
    the sequential run because seeds are positional.
    """
    cells = [(loss, pair) for loss in spec.losses for pair in spec.grid]
    jobs = []
    for ci, (loss, (data_rank, sub_rank)) in enumerate(cells):
        for t in range(spec.trials):
            jobs.append((loss, data_rank, sub_rank, spec.ambient, spec.samples,
                         spec.dist, spec.train, ci, t, spec.master_seed))

    if workers is not None and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_trial, jobs))
    else:
        results = [_run_trial(j) for j in jobs]

    out = []
    for ci, (loss, pair) in enumerate(cells):
        chunk = results[ci * spec.trials:(ci + 1) * spec.trials]
        raw = [r["similarity"] for r in chunk if r["ok"]]
        ortho = [r["ortho"] for r in chunk if r["ok"]]
        failures = sum(not r["ok"] for r in chunk)
        out.append(CellResult(
            loss=loss, pair=pair, raw=raw, ortho=ortho, failures=failures,
            flagged=failures > FAILURE_FLAG_RATE * spec.trials,
            mean=float(np.mean(raw)) if raw else float("nan"),
            seconds=sum(r["seconds"] for r in chunk),
        ))
    return BenchReport(dist=spec.dist, trials=spec.trials, ambient=spec.ambient,
                       samples=spec.samples, master_seed=spec.master_seed,
                       losses=list(spec.losses), grid=list(spec.grid), cells=out)


def _pair_label(pair):
    return f"{pair[0]}→{pair[1]}"


def _ordered_pairs(grid):
    canon = [p for p in CANONICAL_PAIRS if p in grid]
    extra = [p for p in grid if p not in CANONICAL_PAIRS]
    return canon + extra


def emit_table(report: BenchReport, format: str = "csv") -> str:
    """Serialize a report; CSV mirrors the recovery tables (losses as rows,
    rank pairs as columns, 2 decimals, '!' marking high-failure cells)."""
    by_key = {(c.loss, tuple(c.pair)): c for c in report.cells}
    pairs = _ordered_pairs([tuple(p) for p in report.grid])
    if format == "csv":
        lines = ["loss," + ",".join(_pair_label(p) for p in pairs)]
        for loss in report.losses:
            row = [loss]
            for p in pairs:
                cell = by_key[(loss, p)]
                text = "nan" if not cell.raw else f"{cell.mean:.2f}"
                row.append(text + "!" if cell.flagged else text)
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"
    if format == "json":
        doc = {
            "dist": report.dist, "trials": report.trials,
            "ambient": report.ambient, "samples": report.samples,
            "master_seed": report.master_seed, "losses": list(report.losses),
            "columns": [_pair_label(p) for p in pairs],
            "cells": [{
                "loss": c.loss, "pair": _pair_label(c.pair), "mean": c.mean,
                "raw": c.raw, "ortho": c.ortho, "failures": c.failures,
                "flagged": c.flagged,
            } for c in report.cells],
        }
        return json.dumps(doc, indent=2) + "\n"
    raise ContractError(f"unknown format {format!r}")


def spec_to_dict(spec: BenchSpec) -> dict:
    d = asdict(spec)
    d["grid"] = [list(p) for p in spec.grid]
    return d


def spec_from_dict(d: dict) -> BenchSpec:
    d = dict(d)
    if "train" in d and isinstance(d["train"], dict):
        d["train"] = TrainConfig(**d["train"])
    return BenchSpec(**d)
