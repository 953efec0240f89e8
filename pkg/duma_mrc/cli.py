"""
Command-line entry point.

Subcommands: train, eval, predict, gradcheck, data-stats. Exit status is 0 on
success, 1 for user errors (bad flags, missing files, corrupt data or
checkpoints), 2 for internal or numeric failures and 3 when a gradient check
exceeds its threshold.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from duma_mrc import config
from duma_mrc.errors import (
    EXIT_GRADCHECK_FAILED,
    EXIT_INTERNAL_ERROR,
    EXIT_OK,
    EXIT_USER_ERROR,
    ConfigurationError,
    DumaMrcError,
    UsageError,
)
from duma_mrc.logging_setup import configure_logging
from duma_mrc.parsers import LoadReport, load_dream, load_race
from duma_mrc.schemas import RunConfig, TaskKind
from duma_mrc.services.dataset_stats import PUBLISHED_FIGURES, compare_with_published, compute_dataset_stats
from duma_mrc.services.gradcheck_runner import GRADCHECK_THRESHOLD, run_gradcheck
from duma_mrc.services.manifest import build_manifest, read_manifest, write_manifest
from duma_mrc.services.run_config import PRESETS, merge_run_config
from duma_mrc.services.task_data import prepare_tasks
from duma_mrc.services.vocab import Vocab
from duma_mrc.training.checkpoint import load_checkpoint
from duma_mrc.training.trainer import RUNS_SUMMARY_FILE, evaluate, train_best_of

logger = logging.getLogger(__name__)


class CliArgumentParser(argparse.ArgumentParser):
    """argparse that raises ``UsageError`` instead of exiting with status 2."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _task_list(value: str) -> List[str]:
    names = [name.strip() for name in value.split(",") if name.strip()]
    if not names:
        raise argparse.ArgumentTypeError("expected a comma separated list of task names")
    return names


def _add_dataset_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dream", help="DREAM data directory (train.json, dev.json, test.json)")
    parser.add_argument("--race", help="RACE data directory (train/, dev/, test/)")


def build_parser() -> argparse.ArgumentParser:
    parser = CliArgumentParser(prog="duma-mrc", description="DUMA multiple-choice reading comprehension")
    parser.add_argument("--log-dir", help="directory for the rotating log file")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING, ...")
    subparsers = parser.add_subparsers(dest="command", parser_class=CliArgumentParser)
    subparsers.required = True

    train = subparsers.add_parser("train", help="train (optionally multi-task) and keep the best dev checkpoint")
    train.add_argument("--config", help="JSON file with 'model' and 'train' sections")
    train.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE")
    train.add_argument("--tasks", type=_task_list, help="comma separated task names, e.g. dream,race")
    train.add_argument("--preset", choices=list(PRESETS), help="start from the published model scale")
    train.add_argument("--manifest", help="re-run the resolved configuration stored in a run manifest")
    train.add_argument("--seed", type=int)
    train.add_argument("--output-dir")
    train.add_argument("--max-steps", type=int)
    train.add_argument("--runs", type=int, help="train N seeds and keep the best")
    _add_dataset_flags(train)
    train.set_defaults(handler=cmd_train)

    for name, handler, help_text in (
        ("eval", cmd_eval, "accuracy of a checkpoint on a split"),
        ("predict", cmd_predict, "JSON-lines predictions of a checkpoint on a split"),
    ):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--checkpoint", required=True)
        sub.add_argument("--split", choices=["train", "dev", "test"], default="dev")
        sub.add_argument("--tasks", type=_task_list, help="defaults to the tasks stored in the checkpoint")
        _add_dataset_flags(sub)
        if name == "predict":
            sub.add_argument("--out", help="output file (default: stdout)")
        sub.set_defaults(handler=handler)

    gradcheck = subparsers.add_parser("gradcheck", help="finite-difference check of the micro model")
    gradcheck.add_argument("--seed", type=int, default=0)
    gradcheck.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds to check")
    gradcheck.add_argument("--samples", type=int, default=12, help="scalars probed per parameter tensor")
    gradcheck.add_argument("--threshold", type=float, default=GRADCHECK_THRESHOLD)
    gradcheck.set_defaults(handler=cmd_gradcheck)

    stats = subparsers.add_parser("data-stats", help="dataset counts, histograms and length percentiles")
    _add_dataset_flags(stats)
    stats.set_defaults(handler=cmd_data_stats)
    return parser


# --- train -------------------------------------------------------------------

def _resolve_train_config(args: argparse.Namespace) -> RunConfig:
    flags = {"seed": args.seed, "output_dir": args.output_dir, "max_steps": args.max_steps, "runs": args.runs}
    if not args.manifest:
        return merge_run_config(
            config_file=args.config,
            overrides=args.overrides,
            flags=flags,
            preset=args.preset,
            task_names=args.tasks,
            dream_dir=args.dream,
            race_dir=args.race,
        )
    if args.config or args.overrides or args.tasks or args.preset:
        raise UsageError("--manifest cannot be combined with --config, --set, --tasks or --preset")
    recorded = read_manifest(args.manifest)
    return merge_run_config(flags=flags, base=recorded.run_config.model_dump(mode="json"))


def cmd_train(args: argparse.Namespace) -> int:
    run_config = _resolve_train_config(args)
    root = Path(run_config.train.output_dir)
    root.mkdir(parents=True, exist_ok=True)

    tasks, vocab, fingerprints = prepare_tasks(run_config, ("train", "dev"))
    if args.manifest:
        recorded = {(f.task, f.split): f.content_hash for f in read_manifest(args.manifest).datasets}
        for current in fingerprints:
            if recorded.get((current.task, current.split)) != current.content_hash:
                logger.warning("Dataset %s/%s differs from the one recorded in the manifest", current.task, current.split)

    vocab.save(root / config.VOCAB_FILE)
    artifacts = {
        "checkpoint": config.BEST_CHECKPOINT_FILE,
        "metrics": config.METRICS_FILE,
        "vocab": config.VOCAB_FILE,
    }
    if run_config.train.runs > 1:
        artifacts["runs"] = RUNS_SUMMARY_FILE
    write_manifest(root, build_manifest(run_config, fingerprints, artifacts))

    summaries = train_best_of(run_config, tasks, root, vocab)
    print(json.dumps({"output_dir": str(root), "runs": [vars(summary) for summary in summaries]}))
    return EXIT_OK


# --- eval / predict ----------------------------------------------------------

def _load_for_inference(args: argparse.Namespace):
    model, header = load_checkpoint(args.checkpoint)
    vocab_path = Path(args.checkpoint).parent / header.vocab_file
    if not vocab_path.is_file():
        raise ConfigurationError(f"vocabulary {vocab_path} next to the checkpoint is missing")
    vocab = Vocab.load(vocab_path)

    base = {"model": header.model.model_dump(mode="json"), "train": header.train.model_dump(mode="json")}
    run_config = merge_run_config(base=base, task_names=args.tasks, dream_dir=args.dream, race_dir=args.race)
    tasks, _, _ = prepare_tasks(run_config, (args.split,), vocab=vocab)
    evaluable = [task for task in tasks if task.split(args.split)]
    if not evaluable:
        raise ConfigurationError(f"no task has a non-empty {args.split} split")
    return model, evaluable


def cmd_eval(args: argparse.Namespace) -> int:
    model, tasks = _load_for_inference(args)
    scores = {task.name: evaluate(model, task.split(args.split), task.name).accuracy for task in tasks}
    for name, score in scores.items():
        logger.info("%s %s accuracy: %.4f", name, args.split, score)
    print(json.dumps({"checkpoint": args.checkpoint, "split": args.split, "accuracy": scores}))
    return EXIT_OK


def cmd_predict(args: argparse.Namespace) -> int:
    model, tasks = _load_for_inference(args)
    lines = []
    for task in tasks:
        result = evaluate(model, task.split(args.split), task.name)
        lines.extend(record.model_dump_json() for record in result.predictions)
    payload = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(payload, encoding="utf-8")
        logger.info("Wrote %d predictions to %s", len(lines), args.out)
    else:
        sys.stdout.write(payload)
    return EXIT_OK


# --- gradcheck ---------------------------------------------------------------

def cmd_gradcheck(args: argparse.Namespace) -> int:
    if args.seeds < 1 or args.samples < 1:
        raise UsageError("--seeds and --samples must be positive")
    failed = False
    for seed in range(args.seed, args.seed + args.seeds):
        report = run_gradcheck(seed, samples_per_tensor=args.samples, threshold=args.threshold)
        print(report.model_dump_json())
        failed = failed or not report.passed
    return EXIT_GRADCHECK_FAILED if failed else EXIT_OK


# --- data-stats --------------------------------------------------------------

DREAM_SPLIT_FILES = ("train.json", "dev.json", "test.json")


def _load_dream_any(path: str, report: LoadReport):
    root = Path(path)
    if root.is_file():
        return load_dream(root, report)
    if not root.is_dir():
        raise ConfigurationError(f"DREAM path not found: {path}")
    files = [root / name for name in DREAM_SPLIT_FILES if (root / name).is_file()]
    if not files:
        raise ConfigurationError(f"no {', '.join(DREAM_SPLIT_FILES)} under {path}")
    examples = []
    for file_path in files:
        examples.extend(load_dream(file_path, report))
    return examples


def cmd_data_stats(args: argparse.Namespace) -> int:
    sources = []
    dream_path = args.dream or config.DREAM_DIR
    race_path = args.race or config.RACE_DIR
    if dream_path:
        sources.append((TaskKind.DREAM, dream_path))
    if race_path:
        sources.append((TaskKind.RACE, race_path))
    if not sources:
        raise UsageError("pass --dream and/or --race (or set DUMA_DREAM_DIR / DUMA_RACE_DIR)")

    for kind, path in sources:
        report = LoadReport()
        if kind == TaskKind.DREAM:
            examples = _load_dream_any(path, report)
        else:
            if not Path(path).exists():
                raise ConfigurationError(f"RACE path not found: {path}")
            examples = load_race(path, report)
        stats = compute_dataset_stats(kind.value.lower(), examples)
        discrepancies = compare_with_published(stats, kind)
        for problem in discrepancies:
            logger.warning("%s: %s", kind.value, problem)
        summary = stats.as_dict()
        summary.update({
            "path": str(path),
            "files_read": report.files_read,
            "load_warnings": report.warning_count,
            "reference_avg_context_words": PUBLISHED_FIGURES[kind]["avg_context_words"],
            "published_figure_discrepancies": discrepancies,
        })
        print(json.dumps(summary))
    return EXIT_OK


# --- entry point -------------------------------------------------------------

def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        configure_logging(args.log_dir, args.log_level)
        return args.handler(args)
    except DumaMrcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.exit_code != EXIT_USER_ERROR:
            logger.error("Command failed", exc_info=True)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER_ERROR
    except Exception as exc:
        logger.exception("Unexpected failure")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL_ERROR
