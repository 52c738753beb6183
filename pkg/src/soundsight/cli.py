"""Command-line surface.

Subcommands: encode, decode, gen-stimuli, eval, serve, report. Every failure
exits nonzero with a one-line diagnostic on stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import assess, session as session_mod
from .codec import decode, encode
from .dsp import wav_read, wav_write
from .image import image_read, pgm_write
from .schemes import PRESETS, load_scheme
from .stimuli import corpus_read, corpus_write, gen_lesson_corpus, gen_object_corpus


def _cmd_encode(args) -> int:
    image = image_read(args.image)
    scheme = load_scheme(args.scheme)
    wav_write(encode(image, scheme), args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_decode(args) -> int:
    clip = wav_read(args.wav)
    scheme = load_scheme(args.scheme)
    if clip.sample_rate_hz != scheme.sample_rate_hz:
        raise ValueError(
            f"wav rate {clip.sample_rate_hz} does not match scheme rate {scheme.sample_rate_hz}"
        )
    image = decode(clip, scheme, args.rows, args.cols)
    pgm_write(image, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_gen_stimuli(args) -> int:
    out = Path(args.out)
    wrote = []
    if args.kind in ("lessons", "all"):
        corpus_write(gen_lesson_corpus(args.size), out)
        wrote.append("lessons")
    if args.kind in ("objects", "all"):
        corpus_write(gen_object_corpus(size=args.size, seed=args.seed), out)
        wrote.append("objects")
    print(f"wrote {'+'.join(wrote)} corpus to {out / 'manifest.csv'}")
    return 0


def _parse_external(text: str) -> dict[str, float]:
    pairs = {}
    for chunk in text.split(","):
        name, sep, value = chunk.partition("=")
        if not sep:
            raise ValueError(f"bad external metric entry {chunk!r}, expected name=value")
        pairs[name.strip()] = float(value)
    return pairs


def _cmd_eval(args) -> int:
    corpus = corpus_read(args.corpus)
    evaluations = []
    for name in args.schemes:
        scheme = load_scheme(name)
        evaluations.append(
            assess.evaluate_scheme(corpus, scheme, k=args.k, tau=args.tau)
        )
    external = _parse_external(args.external_metric) if args.external_metric else None
    comparison = assess.compare_schemes(
        evaluations, n_perm=args.n_perm, seed=args.seed, external_metric=external
    )
    text = assess.comparison_to_text(comparison)
    Path(args.out).write_text(text)
    if args.csv:
        Path(args.csv).write_text(assess.comparison_to_csv(comparison))
    sys.stdout.write(text)
    return 0


def _cmd_serve(args) -> int:
    from .service import load_config, run

    run(load_config(args.config))
    return 0


def _cmd_report(args) -> int:
    store = Path(args.data_dir) / "sessions"
    corpus = corpus_read(args.corpus) if args.corpus else None
    if args.session:
        log = store / f"{args.session}.events.jsonl"
        report = session_mod.Session.load(log, corpus=corpus).finalize()
        sys.stdout.write(session_mod.report_to_text(report))
    else:
        report = session_mod.group_report(store, args.group, corpus=corpus)
        sys.stdout.write(session_mod.group_report_to_text(report))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="soundsight", description="Image sonification toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    preset_help = f"preset name ({', '.join(sorted(PRESETS))}) or scheme file path"

    p = sub.add_parser("encode", help="encode an image to a WAV clip")
    p.add_argument("--image", required=True, help="input PGM/PNG image")
    p.add_argument("--scheme", required=True, help=preset_help)
    p.add_argument("--out", required=True, help="output WAV path")
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("decode", help="reconstruct an image from a WAV clip")
    p.add_argument("--wav", required=True)
    p.add_argument("--scheme", required=True, help=preset_help)
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--out", required=True, help="output PGM path")
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("gen-stimuli", help="write a stimulus corpus and manifest")
    p.add_argument("--kind", choices=("lessons", "objects", "all"), required=True)
    p.add_argument("--size", type=int, default=64, help="square image size (default 64)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output corpus directory")
    p.set_defaults(func=_cmd_gen_stimuli)

    p = sub.add_parser("eval", help="evaluate and compare encoding schemes on a corpus")
    p.add_argument("--corpus", required=True, help="corpus manifest path or directory")
    p.add_argument("--schemes", nargs="+", required=True, help=preset_help)
    p.add_argument("--out", required=True, help="output report path (key-value text)")
    p.add_argument("--csv", help="optional CSV export path")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--n-perm", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--external-metric",
        help="external per-scheme metric for the correlation slot, e.g. primary=0.42,tanh=0.61",
    )
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--config", help="key-value config file")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("report", help="print session or group reports")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--session", help="session id")
    group.add_argument("--group", help="scheme name (aggregate over its sessions)")
    p.add_argument("--data-dir", default="data", help="service data directory (default ./data)")
    p.add_argument("--corpus", help="corpus manifest override")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # CLI contract: one-line diagnostic, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
