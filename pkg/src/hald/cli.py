"""Command-line interface.

    hald train    --config run.cfg [--paths.corpus_dir D --paths.model_dir D ...]
    hald detect   --config run.cfg --model DIR --input DIR --out DIR
    hald evaluate --det DIR --truth DIR --model DIR --out DIR [--allow-train]
    hald phantom  --out DIR --n 12 --seed 7 [--noise 8]

Any config key can be overridden with `--<key> <value>`; precedence is
command line > config file > defaults. Exit codes: 0 success, 1 usage or
configuration error, 2 data error, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import sys

from .config import KEYS, resolve_config
from .errors import ConfigError, HaldError
from .phantom import generate_corpus
from .pipeline import (
    _resolve_thresholds,
    format_report_table,
    run_detect,
    run_evaluate,
    train,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_config_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", default=None)
    for key in KEYS:
        parser.add_argument(f"--{key}", dest=f"cfg:{key}", metavar="V",
                            default=None)


def _collect_overrides(args: argparse.Namespace) -> dict:
    return {key[len("cfg:"):]: value
            for key, value in vars(args).items()
            if key.startswith("cfg:") and value is not None}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hald",
                     description="Hybrid cephalometric landmark detection")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="learn regions, templates, thresholds")
    p_train.add_argument("--corpus", metavar="DIR", default=None)
    p_train.add_argument("--model", metavar="DIR", default=None)
    _add_config_options(p_train)

    p_detect = sub.add_parser("detect", help="run the three mechanisms")
    p_detect.add_argument("--model", metavar="DIR", required=True)
    p_detect.add_argument("--input", metavar="DIR", required=True)
    p_detect.add_argument("--out", metavar="DIR", required=True)
    _add_config_options(p_detect)

    p_eval = sub.add_parser("evaluate", help="score detections against experts")
    p_eval.add_argument("--det", metavar="DIR", required=True)
    p_eval.add_argument("--truth", metavar="DIR", required=True)
    p_eval.add_argument("--model", metavar="DIR", required=True)
    p_eval.add_argument("--out", metavar="DIR", required=True)
    p_eval.add_argument("--allow-train", action="store_true")
    _add_config_options(p_eval)

    p_phantom = sub.add_parser("phantom", help="generate a synthetic corpus")
    p_phantom.add_argument("--out", metavar="DIR", required=True)
    p_phantom.add_argument("--n", type=int, default=12)
    p_phantom.add_argument("--seed", type=int, default=7)
    p_phantom.add_argument("--noise", type=float, default=8.0)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.command == "phantom":
            case_ids = generate_corpus(args.out, n=args.n, seed=args.seed,
                                       noise=args.noise)
            print(f"wrote {len(case_ids)} phantom cases to {args.out}")
            return EXIT_OK

        config = resolve_config(args.config, _collect_overrides(args))
        if args.command == "train":
            corpus = args.corpus or config["paths.corpus_dir"]
            model = args.model or config["paths.model_dir"]
            if not corpus or not model:
                parser.error("train needs --corpus and --model "
                             "(or paths.* config keys)")
            print(train(config, corpus, model))
            return EXIT_OK
        if args.command == "detect":
            done, failures = run_detect(config, args.model, args.input, args.out)
            print(f"detected {len(done)} cases, {len(failures)} failures")
            for case_id, message in failures:
                print(f"  {case_id}: {message}")
            return EXIT_OK
        if args.command == "evaluate":
            report = run_evaluate(config, args.det, args.truth, args.model,
                                  args.out, allow_train=args.allow_train)
            thresholds = _resolve_thresholds(config, args.model)
            print(format_report_table(report, thresholds))
            print(f"report written to {args.out}")
            return EXIT_OK
    except SystemExit as exc:
        return int(exc.code or 0)
    except ConfigError as exc:
        print(f"hald: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HaldError as exc:
        print(f"hald: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - invariant violations
        print(f"hald: internal error: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
