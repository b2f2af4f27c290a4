"""Command-line front end.

Subcommands: train, bench, traverse, entropy, pca, data. Every command is
deterministic given --seed, writes nothing but diagnostics on failure, and
uses exit codes 0 (success), 1 (usage or configuration error), 2 (numerical
failure such as divergence or a degenerate spectrum). The global --quick
flag shrinks step/trial/sample counts to smoke-test scale.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .bench import BenchSpec, CANONICAL_PAIRS, emit_table, run_bench, spec_from_dict
from .errors import ContractError, DegenerateSpectrumError, ShapeError, TrainingDiverged
from .generators import init_layered_model, init_linear_model, traverse
from .losses import LOSS_KINDS
from .metrics import AttributePredictor, entropy_coefficient
from .model_io import load_model, save_model
from .pca import pca_basis, sym_eig, covariance
from .toydata import DISTRIBUTIONS, make_dataset
from .trainer import TrainConfig, train

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; this tool reserves 2 for
    # numerical failures, so usage problems exit 1 instead.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _write_text(path, text):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _float_csv(values):
    return ",".join(repr(float(v)) for v in values)


def _spawn_seeds(seed, count):
    ss = np.random.SeedSequence(seed)
    return [int(c.generate_state(1, np.uint64)[0]) for c in ss.spawn(count)]


def _stem(path):
    return path[:-5] if path.endswith(".json") else path


def cmd_train(args) -> int:
    data_seed, model_seed, train_seed = _spawn_seeds(args.seed, 3)
    steps = args.steps if args.steps is not None else (400 if args.quick else 20_000)
    dataset = make_dataset(args.ambient, args.rank, args.samples, args.dist, data_seed)
    rng = np.random.default_rng(model_seed)
    if args.kind == "linear":
        model = init_linear_model(args.ambient, args.q, rng)
    else:
        model = init_layered_model(args.ambient, q=args.q, rng=rng)
    cfg = TrainConfig(loss=args.loss, steps=steps, batch=args.batch,
                      lr_g=args.lr, lr_d=args.lr, seed=train_seed)
    model, ema, hist = train(model, dataset, cfg)

    meta = {"seed": args.seed, "config": asdict(cfg), "version": __version__}
    lines = ["step,disc_loss,gen_loss,ortho,sigma"]
    for i in range(len(hist)):
        lines.append(f"{i}," + _float_csv(
            [hist.disc_loss[i], hist.gen_loss[i], hist.ortho[i], hist.sigma[i]]))
    save_model(ema, args.out, meta)
    save_model(model, _stem(args.out) + ".raw.json", meta)
    _write_text(_stem(args.out) + ".history.csv", "\n".join(lines) + "\n")
    print(f"wrote {args.out} (EMA), raw model and history alongside")
    return 0


def _parse_grid(text):
    pairs = []
    for part in text.split(","):
        a, _, b = part.strip().partition(":")
        if not b:
            raise ContractError(f"grid entries look like DATA:SUB, got {part!r}")
        pairs.append((int(a), int(b)))
    return pairs


def cmd_bench(args) -> int:
    if args.spec:
        with open(args.spec, encoding="utf-8") as fh:
            spec = spec_from_dict(json.load(fh))
    else:
        trials = args.trials if args.trials is not None else (2 if args.quick else 20)
        steps = args.steps if args.steps is not None else (300 if args.quick else 20_000)
        spec = BenchSpec(
            grid=_parse_grid(args.grid) if args.grid else list(CANONICAL_PAIRS),
            losses=args.losses.split(",") if args.losses else list(LOSS_KINDS),
            dist=args.dist, trials=trials, ambient=args.ambient,
            samples=args.samples,
            train=TrainConfig(steps=steps, batch=args.batch,
                              lr_g=args.lr, lr_d=args.lr),
            master_seed=args.seed,
        )
    report = run_bench(spec, workers=args.workers)
    _write_text(args.out, emit_table(report, args.format))
    return 0


def cmd_traverse(args) -> int:
    model = load_model(args.model)
    if args.steps == 1:
        grid = np.array([0.0])  # degenerate single-point rule
    else:
        grid = np.linspace(-args.range, args.range, args.steps)
    outputs = traverse(model, args.layer, args.dim, grid, seed=args.seed)
    lines = [f"{float(g)!r}," + _float_csv(x) for g, x in zip(grid, outputs)]
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_entropy(args) -> int:
    model = load_model(args.model)
    values = [float(v) for v in args.pred.split(",")]
    d = model.data_dim
    if len(values) != d + 2:
        raise ContractError(
            f"--pred needs {d} weights plus offset and sharpness ({d + 2} values), "
            f"got {len(values)}")
    pred = AttributePredictor(w=np.array(values[:d]), c=values[d], k=values[d + 1])
    bins = args.bins if args.bins is not None else (20 if args.quick else 100)
    samples = args.samples if args.samples is not None else (100 if args.quick else 1000)

    if (args.layer is None) != (args.dim is None):
        raise ContractError("give both --layer and --dim, or neither")
    if args.layer is not None:
        coef = entropy_coefficient(model, args.layer, args.dim, pred,
                                   bins=bins, samples_per_bin=samples, seed=args.seed)
        doc = {"layer": args.layer, "dim": args.dim, "entropy_coefficient": coef}
    else:
        doc = []
        for i, q in enumerate(model.latent_dims, start=1):
            for j in range(1, q + 1):
                coef = entropy_coefficient(model, i, j, pred, bins=bins,
                                           samples_per_bin=samples, seed=args.seed)
                doc.append({"layer": i, "dim": j, "entropy_coefficient": coef})
    _write_text(args.out, json.dumps(doc, indent=2) + "\n")
    return 0


def cmd_pca(args) -> int:
    data = np.loadtxt(args.data, delimiter=",", ndmin=2)
    q = args.q if args.q is not None else data.shape[1]
    basis = pca_basis(data, q)
    eig = sym_eig(covariance(data))
    lines = [_float_csv(eig.eigenvalues[:q])]
    lines.extend(_float_csv(row) for row in basis)
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_data(args) -> int:
    dataset = make_dataset(args.ambient, args.rank, args.samples, args.dist, args.seed)
    lines = [_float_csv(row) for row in dataset.samples]
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def _build_parser():
    p = _Parser(prog="subspacegan",
                description="Adversarially trained linear-subspace generators "
                            "and PCA-recovery benchmarks.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_required=False):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--quick", action="store_true",
                        help="CI scale: fewer steps/trials/samples")
        sp.add_argument("--out", required=out_required, default=None,
                        help="output path" + ("" if out_required else " (default stdout)"))

    t = sub.add_parser("train", help="train one model on a toy dataset")
    t.add_argument("--kind", choices=("linear", "layered"), default="linear")
    t.add_argument("--rank", type=int, required=True, help="data rank")
    t.add_argument("--q", type=int, required=True, help="subspace dimensions")
    t.add_argument("--ambient", type=int, default=32)
    t.add_argument("--samples", type=int, default=2048)
    t.add_argument("--dist", choices=DISTRIBUTIONS, default="normal")
    t.add_argument("--loss", choices=LOSS_KINDS, default="hinge")
    t.add_argument("--steps", type=int, default=None)
    t.add_argument("--batch", type=int, default=128)
    t.add_argument("--lr", type=float, default=2e-4)
    common(t, out_required=True)
    t.set_defaults(func=cmd_train)

    b = sub.add_parser("bench", help="run the recovery-benchmark grid")
    b.add_argument("--spec", default=None, help="BenchSpec JSON path")
    b.add_argument("--dist", choices=DISTRIBUTIONS, default="normal")
    b.add_argument("--trials", type=int, default=None)
    b.add_argument("--losses", default=None, help="comma list, default all five")
    b.add_argument("--grid", default=None, help='pairs like "5:1,10:3"')
    b.add_argument("--ambient", type=int, default=32)
    b.add_argument("--samples", type=int, default=2048)
    b.add_argument("--steps", type=int, default=None)
    b.add_argument("--batch", type=int, default=128)
    b.add_argument("--lr", type=float, default=2e-4)
    b.add_argument("--workers", type=int, default=None)
    b.add_argument("--format", choices=("csv", "json"), default="csv")
    common(b)
    b.set_defaults(func=cmd_bench)

    tr = sub.add_parser("traverse", help="sweep one latent coordinate")
    tr.add_argument("--model", required=True)
    tr.add_argument("--layer", type=int, required=True, help="1-based")
    tr.add_argument("--dim", type=int, required=True, help="1-based")
    tr.add_argument("--steps", type=int, default=11)
    tr.add_argument("--range", type=float, default=4.5)
    common(tr)
    tr.set_defaults(func=cmd_traverse)

    e = sub.add_parser("entropy", help="entropy coefficient per latent")
    e.add_argument("--model", required=True)
    e.add_argument("--pred", required=True,
                   help="comma floats: d weights, then offset, then sharpness")
    e.add_argument("--bins", type=int, default=None)
    e.add_argument("--samples", type=int, default=None)
    e.add_argument("--layer", type=int, default=None)
    e.add_argument("--dim", type=int, default=None)
    common(e)
    e.set_defaults(func=cmd_entropy)

    pc = sub.add_parser("pca", help="eigendecompose a CSV dataset")
    pc.add_argument("--data", required=True, help="CSV, one row per sample")
    pc.add_argument("--q", type=int, default=None)
    common(pc)
    pc.set_defaults(func=cmd_pca)

    d = sub.add_parser("data", help="emit a toy dataset as CSV")
    d.add_argument("--ambient", type=int, default=32)
    d.add_argument("--rank", type=int, required=True)
    d.add_argument("--samples", type=int, default=2048)
    d.add_argument("--dist", choices=DISTRIBUTIONS, default="normal")
    common(d)
    d.set_defaults(func=cmd_data)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (TrainingDiverged, DegenerateSpectrumError) as exc:
        print(f"subspacegan: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ContractError, ShapeError, OSError, ValueError) as exc:
        print(f"subspacegan: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
