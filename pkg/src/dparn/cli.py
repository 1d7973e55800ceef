"""Command-line interface: ``dparn <command> [--flags]``.

Logs go to standard error; reports, tables and JSON go to standard output or
to the files named by flags. Configuration precedence is flag, then
environment variable (``DPARN_SEED``, ``DPARN_THREADS``), then default.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import secrets
import subprocess
import sys
import time
from pathlib import Path

log = logging.getLogger("dparn")

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def _build_id() -> str:
    from . import __version__

    try:
        rev = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"], cwd=Path(__file__).parent,
            capture_output=True, text=True, timeout=5,
        ).stdout.strip()
    except (OSError, subprocess.SubprocessError):
        rev = ""
    return f"{__version__}+{rev}" if rev else __version__


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("DPARN_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            from .errors import ConfigurationError

            raise ConfigurationError(f"DPARN_SEED must be an integer, got {env!r}") from None
    return secrets.randbelow(2**31)


def _apply_threads(args) -> None:
    threads = args.threads or os.environ.get("DPARN_THREADS")
    if threads:
        for var in _THREAD_VARS:
            os.environ[var] = str(threads)


def _log_config(args, **extra) -> None:
    cfg = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()
           if k != "func"}
    cfg.update(extra)
    cfg["build"] = _build_id()
    log.info("config %s", json.dumps(cfg, sort_keys=True, default=str))


def _read_audio(path, downmix: bool = False):
    from .dsp import load_wav

    buf = load_wav(path)
    if downmix and buf.channels > 1:
        buf = buf.downmix()
    buf.require_full_band_mono()
    return buf


# -- commands ------------------------------------------------------------------

def cmd_enhance(args) -> int:
    from .dsp import WavBuffer, istft, save_wav, stft
    from .weights import load_weights

    _log_config(args)
    model = load_weights(args.model)
    noisy = _read_audio(args.input, args.downmix)
    t0 = time.perf_counter()
    spec = stft(noisy.samples)
    out = istft(model.enhance_spectrogram(spec), length=len(noisy))
    elapsed = time.perf_counter() - t0
    save_wav(args.out, WavBuffer(out.astype("float32"), noisy.sample_rate))
    rtf = elapsed / max(noisy.duration, 1e-12)
    print(f"frames={spec.shape[0]} seconds={elapsed:.3f} rtf={rtf:.3f}")
    return 0


def cmd_train_toy(args) -> int:
    from dataclasses import replace

    from .model import DparnConfig
    from .plotting import plot_loss_curve
    from .training import REGIME_WARMUP, TOY_SCHEDULE, TrainConfig, train_toy, write_trace_csv
    from .weights import save_weights

    seed = _resolve_seed(args)
    schedule = TOY_SCHEDULE
    if args.regime != "toy":
        schedule = replace(TOY_SCHEDULE, warmup=REGIME_WARMUP[args.regime])
    model_cfg = DparnConfig() if args.size == "canonical" else DparnConfig.reduced()
    config = TrainConfig(model=model_cfg, schedule=schedule, snr_db=args.snr, seed=seed)
    _log_config(args, resolved_seed=seed, warmup=schedule.warmup, lr_scale=schedule.scale)

    clean = _read_audio(args.clean, args.downmix)
    noise = _read_audio(args.noise, args.downmix)

    def progress(row):
        if row["step"] % 25 == 0 or row["step"] == 1:
            log.info("step %d loss %.6g lr %.3g", row["step"], row["total"], row["lr"])

    result = train_toy(clean, noise, args.steps, config, callback=progress)
    save_weights(result.model, args.out)
    csv_path = Path(args.csv) if args.csv else Path(args.out).with_suffix(".csv")
    write_trace_csv(result.trace, csv_path)
    log.info("wrote %s and %s", args.out, csv_path)
    if result.trace and not args.no_plot:
        fig = Path(args.plot) if args.plot else csv_path.with_suffix(".png")
        plot_loss_curve(result.trace, fig)
        log.info("wrote %s", fig)
    if result.trace:
        first, last = result.trace[0]["total"], result.trace[-1]["total"]
        print(f"steps={len(result.trace)} initial_loss={first:.6g} final_loss={last:.6g} "
              f"ratio={last / first:.4f}")
    else:
        print("steps=0")
    return 0


def cmd_inspect(args) -> int:
    from .model import DparnConfig, DparnModel
    from .weights import load_weights

    _log_config(args)
    if args.model:
        model = load_weights(args.model)
    else:
        cfg = DparnConfig() if args.config == "canonical" else DparnConfig.reduced()
        model = DparnModel(cfg)
    rows = model.layer_table(n_frames=1)
    width = max(len(r[0]) for r in rows)
    print(f"{'layer':<{width}}  {'output (per frame)':<20}  params")
    for name, shape, count in rows:
        print(f"{name:<{width}}  {str(tuple(shape)):<20}  {count}")
    total = model.num_parameters()
    frozen = model.num_parameters(trainable_only=False) - total
    print(f"total trainable parameters: {total} ({total / 1e6:.3f}M); frozen entries: {frozen}")
    return 0


def cmd_verify(args) -> int:
    from .errors import ContractError
    from .verify import run_suites
    from .weights import load_weights

    seed = _resolve_seed(args) if args.seed is not None or os.environ.get("DPARN_SEED") else 0
    _log_config(args, resolved_seed=seed)
    model = load_weights(args.model) if args.model else None
    names = ["scm", "stft", "gradcheck"] if args.suite == "all" else [args.suite]
    reports = run_suites(names, model=model, seed=seed)
    payload = {"passed": all(r.passed for r in reports), "suites": [r.to_dict() for r in reports]}
    print(json.dumps(payload, indent=2))
    for r in reports:
        for c in r.checks:
            if not c.passed:
                log.error("%s/%s failed: value %s, threshold %s %s", r.suite, c.name, c.value,
                          c.threshold, json.dumps(c.detail) if c.detail else "")
    return 0 if payload["passed"] else ContractError.exit_code


def cmd_metrics(args) -> int:
    import csv

    from .dsp import load_wav
    from .errors import ConfigurationError
    from .metrics import si_sdr

    _log_config(args)
    if args.ref and args.est:
        res = si_sdr(load_wav(args.est), load_wav(args.ref))
        if res.truncated:
            log.warning("lengths differ; compared the first %d samples", res.length)
        print(json.dumps({"si_sdr_db": res.value, "alpha": res.alpha, "length": res.length}))
        return 0
    if not (args.ref_dir and args.est_dir):
        raise ConfigurationError("give --ref and --est, or --ref-dir and --est-dir")
    rows = []
    for est_path in sorted(Path(args.est_dir).glob("*.wav")):
        ref_path = Path(args.ref_dir) / est_path.name
        if not ref_path.exists():
            log.warning("no reference for %s", est_path.name)
            continue
        res = si_sdr(load_wav(est_path), load_wav(ref_path))
        rows.append((str(est_path), res.value, res.alpha))
    out = open(args.csv, "w", newline="") if args.csv else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(["path", "si_sdr_db", "alpha"])
        for path, value, alpha in rows:
            writer.writerow([path, f"{value:.6f}", f"{alpha:.9g}"])
    finally:
        if args.csv:
            out.close()
    log.info("scored %d files", len(rows))
    return 0


def cmd_scm_dump(args) -> int:
    import csv

    import numpy as np

    from .plotting import plot_filterbank
    from .scm import CANONICAL_LAYOUT, ScmMatrix, build_init_matrix
    from .weights import load_weights

    _log_config(args)
    scm = build_init_matrix(CANONICAL_LAYOUT)
    if args.model:
        model = load_weights(args.model)
        init = build_init_matrix(model.config.layout)
        learned = model.scm_matrix().data.astype(np.float64)
        scm = ScmMatrix(learned, init.layout, init.left, init.center, init.right)
    freqs = scm.layout.bin_frequencies()
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "bin", "freq_hz", "weight"])
        for r, c in zip(*np.nonzero(scm.matrix)):
            writer.writerow([int(r), int(c), f"{freqs[c]:g}", f"{scm.matrix[r, c]:.12g}"])
    log.info("wrote %s", args.out)
    if args.figure:
        plot_filterbank(scm, args.figure)
        log.info("wrote %s", args.figure)
    return 0


def cmd_make_toy_data(args) -> int:
    import numpy as np

    from .dsp import save_wav
    from .dsp.synth import pink_noise, speech_like, white_noise

    seed = _resolve_seed(args)
    _log_config(args, resolved_seed=seed)
    rng = np.random.default_rng(seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    clean = speech_like(args.duration, rng)
    noise = (pink_noise if args.noise == "pink" else white_noise)(args.duration, rng)
    save_wav(out / "clean.wav", clean)
    save_wav(out / "noise.wav", noise)
    print(f"{out / 'clean.wav'}\n{out / 'noise.wav'}")
    return 0


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="overrides DPARN_SEED")
    common.add_argument("--threads", type=int, default=None, help="overrides DPARN_THREADS")
    common.add_argument("--verbose", action="store_true")
    common.add_argument("--quiet", action="store_true")

    parser = argparse.ArgumentParser(prog="dparn", description=__doc__.splitlines()[0],
                                     allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_, allow_abbrev=False)
        p.set_defaults(func=func)
        return p

    p = add("enhance", cmd_enhance, "enhance a 48 kHz recording")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--downmix", action="store_true")

    p = add("train-toy", cmd_train_toy, "fit a model to one noisy clip")
    p.add_argument("--clean", required=True)
    p.add_argument("--noise", required=True)
    p.add_argument("--snr", type=float, default=5.0)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--out", required=True)
    p.add_argument("--regime", choices=("toy", "exp1", "exp2"), default="toy")
    p.add_argument("--size", choices=("reduced", "canonical"), default="reduced")
    p.add_argument("--csv", default=None, help="loss trace (default: next to --out)")
    p.add_argument("--plot", default=None, help="loss figure (default: next to the CSV)")
    p.add_argument("--no-plot", action="store_true")
    p.add_argument("--downmix", action="store_true")

    p = add("inspect", cmd_inspect, "per-layer table and parameter count")
    p.add_argument("--model", default=None)
    p.add_argument("--config", choices=("canonical", "reduced"), default="canonical")

    p = add("verify", cmd_verify, "run self-check suites")
    p.add_argument("--suite", choices=("gradcheck", "scm", "stft", "all"), default="all")
    p.add_argument("--model", default=None)

    p = add("metrics", cmd_metrics, "SI-SDR of estimates against references")
    p.add_argument("--ref")
    p.add_argument("--est")
    p.add_argument("--ref-dir")
    p.add_argument("--est-dir")
    p.add_argument("--csv", default=None)

    p = add("scm-dump", cmd_scm_dump, "write the compression matrix as CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--model", default=None)
    p.add_argument("--figure", default=None)

    p = add("make-toy-data", cmd_make_toy_data, "synthesize a clean clip and a noise clip")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--duration", type=float, default=2.0)
    p.add_argument("--noise", choices=("pink", "white"), default="pink")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, stream=sys.stderr, force=True,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    _apply_threads(args)
    from .errors import DparnError

    try:
        return args.func(args)
    except DparnError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    except OSError as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
