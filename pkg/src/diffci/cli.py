"""Command-line entry point.

Subcommands cover the full workflow: `schedule` and `analyze` dump
diagnostic CSVs, `train` runs baseline or CI-focused training, `generate`
samples from a checkpoint, `eval` scores generated signals against training
data, and `sweep` runs the triangular CI grid. All outputs are plain CSV.

Exit codes: 0 on success, 1 on runtime failure (single-line `error: ...`
on stderr), 2 on invalid flags. A `--config` file holds key=value lines
whose keys are flag names with underscores; explicit flags win.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import data as dio
from . import metrics
from . import sweep as sweep_mod
from .contribution import contribution, contribution_dmu
from .generation import GenerationConfig, ddpm_sample
from .network import init_params
from .schedule import make_linear_schedule
from .timesteps import CIConfig, Z_CENTRAL_50, ci_to_params, pmf_from_ci, uniform_pmf
from .training import TrainConfig, train

__all__ = ["main", "entry"]


def _f(x: float) -> str:
    return repr(float(x))


def _schedule_flags(p: argparse.ArgumentParser):
    p.add_argument("--T", type=int, default=1000, help="diffusion steps")
    p.add_argument("--beta-start", type=float, default=1e-4)
    p.add_argument("--beta-end", type=float, default=0.02)


def _data_flags(p: argparse.ArgumentParser):
    p.add_argument("--data", type=str, default=None,
                   help="delimited signal file (CSV/TSV/whitespace)")
    p.add_argument("--labels", action="store_true",
                   help="first column of --data is an integer label")
    p.add_argument("--synth", action="store_true",
                   help="use the seeded synthetic bump dataset")
    p.add_argument("--synth-n", type=int, default=512)
    p.add_argument("--synth-d", type=int, default=32)
    p.add_argument("--synth-classes", type=int, default=3)
    p.add_argument("--synth-seed", type=int, default=0)


def _load_dataset(args) -> dio.SignalDataset:
    if (args.data is None) == (not args.synth):
        raise ValueError("exactly one of --data or --synth is required")
    if args.data is not None:
        return dio.load_delimited(args.data, has_label_column=args.labels)
    return dio.synth_1d(args.synth_n, args.synth_d, args.synth_classes,
                        args.synth_seed)


def _parse_bounds(spec: str) -> list[float]:
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"bounds range must be start:stop:step, got {spec!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("bounds step must be positive")
        vals, v = [], start
        while v <= stop + 1e-9:
            vals.append(v)
            v += step
        return vals
    return [float(p) for p in spec.split(",") if p.strip()]


def cmd_schedule(args) -> int:
    sched = make_linear_schedule(args.T, args.beta_start, args.beta_end)
    with open(args.out, "w") as fh:
        fh.write("t,beta,alpha_bar,sigma,snr\n")
        for t in range(1, sched.T + 1):
            i = t - 1
            fh.write(f"{t},{_f(sched.betas[i])},{_f(sched.alpha_bars[i])},"
                     f"{_f(sched.sigmas[i])},{_f(sched.snrs[i])}\n")
    return 0


def cmd_analyze(args) -> int:
    sched = make_linear_schedule(args.T, args.beta_start, args.beta_end)
    ci = CIConfig(args.cl, args.ch, args.z)
    params = ci_to_params(ci)
    pmf = pmf_from_ci(ci, sched.T)
    with open(args.out, "w") as fh:
        fh.write(f"# mu={_f(params.mu)} sigma={_f(params.sigma)} "
                 f"lambda={_f(pmf.lam)} tail_mass={_f(pmf.tail_mass)} "
                 f"tau={_f(args.tau)}\n")
        fh.write("t,prob,snr,contribution,dcontrib_dmu\n")
        for t in range(1, sched.T + 1):
            fh.write(f"{t},{_f(pmf.probs[t - 1])},{_f(sched.snrs[t - 1])},"
                     f"{_f(contribution(pmf, sched, t))},"
                     f"{_f(contribution_dmu(params, sched, t))}\n")
    return 0


def _write_report(prefix: str, report) -> None:
    with open(f"{prefix}_loss.csv", "w") as fh:
        fh.write("epoch,mean_loss\n")
        for i, loss in enumerate(report.epoch_losses, start=1):
            fh.write(f"{i},{_f(loss)}\n")
    with open(f"{prefix}_hist.csv", "w") as fh:
        fh.write("t,count\n")
        for t, c in enumerate(report.timestep_histogram, start=1):
            fh.write(f"{t},{c}\n")


def cmd_train(args) -> int:
    sched = make_linear_schedule(args.T, args.beta_start, args.beta_end)
    dataset = _load_dataset(args)
    if (args.cl is None) != (args.ch is None):
        raise ValueError("--cl and --ch must be given together")
    ci = CIConfig(args.cl, args.ch, args.z) if args.cl is not None else None
    epochs = args.epochs if args.epochs is not None else (50 if args.pretrain else 30)
    lr = args.lr if args.lr is not None else (1e-3 if args.pretrain else 1e-4)
    if args.from_checkpoint:
        params, _ = dio.load_checkpoint(args.from_checkpoint,
                                        expected_input_dim=dataset.D)
    else:
        init_seed = int(np.random.SeedSequence(args.seed).generate_state(1)[0])
        hidden = tuple(int(h) for h in args.hidden.split(",") if h.strip())
        params = init_params(dataset.D, args.embed_dim, hidden, init_seed)
    pmf = pmf_from_ci(ci, sched.T) if ci is not None else uniform_pmf(sched.T)
    cfg = TrainConfig(epochs=epochs, learning_rate=lr, batch_size=args.batch,
                      ci=ci, seed=args.seed)
    tuned, report = train(params, dataset, sched, pmf, cfg)
    provenance = {
        "schedule": {"T": sched.T, "beta_start": args.beta_start,
                     "beta_end": args.beta_end,
                     "fingerprint": dio.schedule_fingerprint(sched)},
        "ci": None if ci is None else {"c_l": ci.c_l, "c_h": ci.c_h, "z": ci.z},
        "seed": args.seed,
        "epochs": epochs,
    }
    dio.save_checkpoint(args.out_checkpoint, tuned, provenance)
    if args.report:
        _write_report(args.report, report)
    print(f"trained {epochs} epochs, final loss {report.epoch_losses[-1]:.6g}, "
          f"checkpoint {args.out_checkpoint}")
    return 0


def cmd_generate(args) -> int:
    params, provenance = dio.load_checkpoint(args.checkpoint)
    s = provenance.get("schedule", {})
    sched = make_linear_schedule(
        args.T if args.T is not None else int(s.get("T", 1000)),
        args.beta_start if args.beta_start is not None else s.get("beta_start", 1e-4),
        args.beta_end if args.beta_end is not None else s.get("beta_end", 0.02))
    clip = None
    if args.clip:
        lo, hi = (float(v) for v in args.clip.split(":"))
        clip = (lo, hi)
    cfg = GenerationConfig(num_samples=args.num, seed=args.seed, clip_range=clip)
    samples = ddpm_sample(params, sched, cfg)
    dio.write_signals_csv(args.out, samples)
    print(f"wrote {args.num} samples to {args.out}")
    return 0


def cmd_eval(args) -> int:
    generated = dio.read_signals_csv(args.generated)
    train_ds = dio.load_delimited(args.train, has_label_column=args.labels)
    report = metrics.evaluate(generated, train_ds.signals, pca_k=args.pca,
                              bins=args.bins)
    with open(args.out, "w") as fh:
        cols = ["mean_l2"]
        cols += [f"wasserstein_c{i + 1}" for i in range(args.pca)]
        cols += [f"js_c{i + 1}" for i in range(args.pca)]
        cols.append("js_raw")
        fh.write(",".join(cols) + "\n")
        vals = [report.mean_l2, *report.wasserstein_per_component,
                *report.js_per_component, report.js_raw]
        fh.write(",".join(_f(v) for v in vals) + "\n")
    print(f"mean_l2={report.mean_l2:.6g} js_raw={report.js_raw:.6g}")
    return 0


def cmd_sweep(args) -> int:
    sched = make_linear_schedule(args.T, args.beta_start, args.beta_end)
    dataset = _load_dataset(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = sweep_mod.build_grid(_parse_bounds(args.bounds), z=args.z)
    if max(grid.bounds) > sched.T:
        raise ValueError(f"bounds exceed the schedule horizon T={sched.T}")
    ss = np.random.SeedSequence(args.base_seed).generate_state(2)
    base_params = init_params(dataset.D, args.embed_dim,
                              tuple(int(h) for h in args.hidden.split(",")),
                              int(ss[0]))
    cfg_pre = TrainConfig(epochs=args.pre_epochs, learning_rate=args.pre_lr,
                          batch_size=args.batch, seed=int(ss[1]))
    base, _ = train(base_params, dataset, sched, uniform_pmf(sched.T), cfg_pre)
    dio.save_checkpoint(out_dir / "baseline.ckpt", base, {
        "schedule": {"T": sched.T, "beta_start": args.beta_start,
                     "beta_end": args.beta_end,
                     "fingerprint": dio.schedule_fingerprint(sched)},
        "ci": None, "seed": args.base_seed, "epochs": args.pre_epochs,
    })
    cfg_fine = TrainConfig(epochs=args.epochs, learning_rate=args.lr,
                           batch_size=args.batch)
    gen_cfg = GenerationConfig(num_samples=args.num_samples)
    seeds = [args.base_seed + i for i in range(args.seeds)]
    result = sweep_mod.run_sweep(grid, dataset, sched, base, cfg_fine, gen_cfg,
                                 seeds, jobs=args.jobs, distance=args.distance,
                                 pca_k=args.pca, bins=args.bins)
    sweep_mod.write_sweep_csv(result, out_dir / "sweep.csv")
    sweep_mod.write_correlation_csv(result, out_dir / "correlations.csv")
    cm, cw = result.corr_mean_location, result.corr_width
    print(f"{len(result.rows)} cells done, {len(result.failures)} failed")
    if cm is not None:
        print(f"corr(mean_location, {args.distance}): r={cm.r:.4f} "
              f"p={cm.p_value:.4g}")
        print(f"corr(width, {args.distance}): r={cw.r:.4f} p={cw.p_value:.4g}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="diffci",
        description="1D diffusion training lab with confidence-interval "
                    "based timestep sampling")
    subs = parser.add_subparsers(dest="command", required=True)
    by_name = {}

    def sub(name, func, help_):
        p = subs.add_parser(name, help=help_)
        p.add_argument("--config", type=str, default=None,
                       help="key=value defaults file; flags win")
        p.set_defaults(func=func)
        by_name[name] = p
        return p

    p = sub("schedule", cmd_schedule, "dump per-timestep schedule CSV")
    _schedule_flags(p)
    p.add_argument("--out", type=str, required=True)

    p = sub("analyze", cmd_analyze, "dump pmf/SNR/contribution CSV")
    _schedule_flags(p)
    p.add_argument("--cl", type=float, required=True)
    p.add_argument("--ch", type=float, required=True)
    p.add_argument("--z", type=float, default=Z_CENTRAL_50)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--out", type=str, required=True)

    p = sub("train", cmd_train, "train a denoiser (uniform or CI sampling)")
    _schedule_flags(p)
    _data_flags(p)
    p.add_argument("--cl", type=float, default=None)
    p.add_argument("--ch", type=float, default=None)
    p.add_argument("--z", type=float, default=Z_CENTRAL_50)
    p.add_argument("--pretrain", action="store_true",
                   help="baseline defaults: 50 epochs at lr 1e-3")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--embed-dim", type=int, default=32)
    p.add_argument("--hidden", type=str, default="128,128")
    p.add_argument("--from-checkpoint", type=str, default=None)
    p.add_argument("--out-checkpoint", type=str, required=True)
    p.add_argument("--report", type=str, default=None,
                   help="prefix for loss/histogram CSVs")

    p = sub("generate", cmd_generate, "sample signals from a checkpoint")
    p.add_argument("--checkpoint", type=str, required=True)
    p.add_argument("--num", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--clip", type=str, default=None, help="lo:hi final clamp")
    p.add_argument("--T", type=int, default=None)
    p.add_argument("--beta-start", type=float, default=None)
    p.add_argument("--beta-end", type=float, default=None)
    p.add_argument("--out", type=str, required=True)

    p = sub("eval", cmd_eval, "score generated signals against training data")
    p.add_argument("--generated", type=str, required=True)
    p.add_argument("--train", type=str, required=True)
    p.add_argument("--labels", action="store_true")
    p.add_argument("--pca", type=int, default=2)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--out", type=str, required=True)

    p = sub("sweep", cmd_sweep, "triangular CI-grid experiment")
    _schedule_flags(p)
    _data_flags(p)
    p.add_argument("--bounds", type=str, default="100:1000:100",
                   help="start:stop:step or comma list")
    p.add_argument("--z", type=float, default=Z_CENTRAL_50)
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--num-samples", type=int, default=1000)
    p.add_argument("--pre-epochs", type=int, default=50)
    p.add_argument("--pre-lr", type=float, default=1e-3)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--embed-dim", type=int, default=32)
    p.add_argument("--hidden", type=str, default="128,128")
    p.add_argument("--pca", type=int, default=2)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--distance", type=str, default="mean_l2",
                   choices=["mean_l2", "js_raw"])
    p.add_argument("--out-dir", type=str, required=True)

    return parser, by_name


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _read_config(path: str) -> dict:
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}: line {lineno}: expected key=value")
        key, _, val = line.partition("=")
        values[key.strip().replace("-", "_")] = val.strip()
    return values


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, by_name = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config is not None:
            overrides = _read_config(args.config)
            sub = by_name[args.command]
            known = {a.dest: a for a in sub._actions}
            defaults = {}
            for key, raw in overrides.items():
                if key not in known or key in ("help", "config", "func"):
                    raise ValueError(f"unknown config key {key!r}")
                action = known[key]
                if isinstance(action, (argparse._StoreTrueAction,
                                       argparse._StoreFalseAction)):
                    low = raw.lower()
                    if low not in _TRUE | _FALSE:
                        raise ValueError(f"config key {key!r} needs a boolean, "
                                         f"got {raw!r}")
                    defaults[key] = low in _TRUE
                else:
                    defaults[key] = raw  # argparse applies `type` to strings
            sub.set_defaults(**defaults)
            args = parser.parse_args(argv)
        return args.func(args)
    except Exception as e:  # noqa: BLE001 - single-line machine-parsable exit
        print(f"error: {e}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())
