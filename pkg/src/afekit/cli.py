"""``afekit`` command line: extract, align, eval, bench, split.

Exit codes: 0 ok, 2 I/O or unreadable input, 3 contract/shape violation,
4 manifest inconsistency.
"""

import argparse
import json
import logging
import os
import sys

from . import aligner, audio, encoder, harness, tensorio
from .errors import AfeError, ContractError
from .metrics import METRICS, evaluate_suite

EXIT_OK, EXIT_IO, EXIT_CONTRACT, EXIT_MANIFEST = 0, 2, 3, 4
SEED_ENV = "AFEKIT_SEED"

log = logging.getLogger("afekit")


def default_seed():
    try:
        return int(os.environ.get(SEED_ENV, "0"))
    except ValueError:
        return 0


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _mel_config(args):
    return audio.MelConfig(
        sample_rate=args.sample_rate,
        window_ms=args.window_ms,
        hop_ms=args.hop_ms,
        n_mels=args.n_mels,
        fmin=args.fmin,
        fmax=args.fmax if args.fmax is not None else args.sample_rate / 2,
    )


def _info(msg, to_stderr):
    print(msg, file=sys.stderr if to_stderr else sys.stdout)


def cmd_extract(args):
    cfg = _mel_config(args)
    buf = audio.load_wav(args.audio)
    if buf.sample_rate != cfg.sample_rate:
        buf = audio.resample(buf, cfg.sample_rate)
    mel = audio.log_mel_spectrogram(buf, cfg)
    if not args.raw:
        mel = audio.normalize_log_mel(mel)
    if args.out:
        audio.export_mel(mel, args.out)
    t, n = mel.shape
    _info(f"mel shape {t}×{n} @{mel.frame_rate_hz:g}Hz", args.out == "-")
    return EXIT_OK


def cmd_align(args):
    cfg = aligner.AlignConfig(args.w, args.s, args.p, args.fps)
    if tensorio.is_tensor_file(args.input):
        emb = encoder.import_embeddings(args.input)
    else:
        mel_cfg = _mel_config(args)
        mel = audio.extract_features(audio.load_wav(args.input), mel_cfg)
        params = encoder.ReferenceEncoderParams(seed=args.seed, n_mels=mel_cfg.n_mels)
        emb = encoder.encode_reference(mel, params)
    if args.emb_out:
        encoder.export_embeddings(emb, args.emb_out)
    aligned = aligner.align(emb, cfg, recompute_stride=args.recompute_stride)
    if args.out:
        aligner.export_aligned(aligned, args.out)
    n, w, c = aligned.shape
    _info(f"aligned shape {n}×{w}×{c}", args.out == "-")
    return EXIT_OK


def cmd_eval(args):
    metrics = [m for m in args.metrics.split(",") if m.strip()] if args.metrics else None
    report = evaluate_suite(args.pred, args.truth, args.manifest, metrics, workers=args.workers)
    text = report.to_csv() if args.format == "csv" else report.to_json(per_frame=args.per_frame)
    _emit(text, args.out)
    return EXIT_OK


def _emit_report(obj, args):
    _emit(obj.to_csv() if args.format == "csv" else obj.to_json(), args.out)


def cmd_bench_afe(args):
    curve = harness.bench_afe(
        durations=args.durations, repeats=args.repeats, seed=args.seed
    )
    _emit_report(curve, args)
    return EXIT_OK


def cmd_bench_pipeline(args):
    if not 1 <= args.row <= len(harness.TABLE3_ROWS):
        raise ContractError(f"--row must be in 1..{len(harness.TABLE3_ROWS)}")
    row = harness.TABLE3_ROWS[args.row - 1]
    if args.virtual_clock:
        clock = harness.VirtualClock()
        sleep = clock.sleep
    else:
        import time

        clock, sleep = time.perf_counter, time.sleep
    stages = harness.table3_stages(
        row, latency=args.latency, time_scale=args.time_scale, seed=args.seed, sleep=sleep
    )
    report = harness.run_pipeline(
        stages, None, clock=clock,
        answer_tokens=row.answer_tokens, answer_duration_s=row.answer_duration_s,
    )
    _emit_report(report, args)
    return EXIT_OK


def cmd_bench_replay(args):
    report = harness.replay_report(
        harness.read_replay_csv(args.csv), args.tokens, args.answer_duration
    )
    _emit_report(report, args)
    return EXIT_OK


def cmd_split(args):
    train, ev = harness.split_dataset(args.n, args.fraction)
    print(json.dumps({"train": [train.start, train.stop], "eval": [ev.start, ev.stop]}))
    return EXIT_OK


def _add_mel_flags(p):
    g = p.add_argument_group("mel front end")
    g.add_argument("--sample-rate", type=int, default=audio.SAMPLE_RATE)
    g.add_argument("--window-ms", type=float, default=audio.WINDOW_MS)
    g.add_argument("--hop-ms", type=float, default=audio.HOP_MS)
    g.add_argument("--n-mels", type=int, default=audio.N_MELS)
    g.add_argument("--fmin", type=float, default=0.0)
    g.add_argument("--fmax", type=float, default=None, help="default: sample_rate/2")


def _add_format(p):
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None, help="output file (default stdout)")


def build_parser():
    parser = argparse.ArgumentParser(prog="afekit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="WAV -> normalised log-mel tensor")
    p.add_argument("audio")
    p.add_argument("--out", default=None, help="tensor file, '-' for stdout")
    p.add_argument("--raw", action="store_true", help="skip clamp-and-scale normalisation")
    _add_mel_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("align", help="WAV or embedding tensor -> aligned windows")
    p.add_argument("input")
    p.add_argument("--w", type=int, default=16)
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--p", type=int, default=7)
    p.add_argument("--fps", type=float, default=25.0)
    p.add_argument("--seed", type=int, default=default_seed())
    p.add_argument("--recompute-stride", action="store_true",
                   help="on a rate mismatch use s = round(rate/fps) instead of failing")
    p.add_argument("--out", default=None, help="aligned tensor file, '-' for stdout")
    p.add_argument("--emb-out", default=None, help="also write the embeddings")
    _add_mel_flags(p)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("eval", help="quality metrics over frame directories")
    p.add_argument("pred")
    p.add_argument("truth")
    p.add_argument("--manifest", default=None)
    p.add_argument("--metrics", default=None, help=f"comma list from {','.join(METRICS)}")
    p.add_argument("--per-frame", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    _add_format(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="AFE curves, mock pipelines, Table-3 replay")
    bsub = p.add_subparsers(dest="mode", required=True)
    b = bsub.add_parser("afe")
    b.add_argument("--durations", type=_float_list, default=[1, 2, 4, 8, 16, 30])
    b.add_argument("--repeats", type=int, default=5)
    b.add_argument("--seed", type=int, default=default_seed())
    _add_format(b)
    b.set_defaults(func=cmd_bench_afe)
    b = bsub.add_parser("pipeline")
    b.add_argument("--mock", choices=("table3",), default="table3")
    b.add_argument("--row", type=int, default=1, help="Table-3 row, 1-based")
    b.add_argument("--latency", choices=("fixed", "lognormal"), default="fixed")
    b.add_argument("--time-scale", type=float, default=1.0)
    b.add_argument("--virtual-clock", action="store_true", help="advance time instead of sleeping")
    b.add_argument("--seed", type=int, default=default_seed())
    _add_format(b)
    b.set_defaults(func=cmd_bench_pipeline)
    b = bsub.add_parser("replay")
    b.add_argument("--csv", required=True, help="stage,seconds")
    b.add_argument("--tokens", type=int, default=0)
    b.add_argument("--answer-duration", type=float, default=0.0)
    _add_format(b)
    b.set_defaults(func=cmd_bench_replay)

    p = sub.add_parser("split", help="train/eval frame ranges")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--fraction", type=float, default=harness.TRAIN_FRACTION)
    p.set_defaults(func=cmd_split)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "split" and args.n < 2:
        parser.error(f"--n must be >= 2, got {args.n}")
    try:
        return args.func(args)
    except AfeError as exc:
        print(f"afekit: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"afekit: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
