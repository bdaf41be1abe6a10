"""The ``tvdm`` command line.

Every command works inside one run directory (``--out``)::

    run.json                  resolved config, seed, code version, command log
    data/                     generated dataset and manifest
    checkpoints/<stage>.ckpt  vae, tvae, vdm, amcm
    metrics/                  loss histories and evaluation reports
    logs/<command>.log
    generated/<name>/         RGBA frames, preview over black, boxes, metadata

Stages must run in order; a command whose upstream checkpoint is missing
exits with code 3 and names the command to run first.
"""

import argparse
import logging
import sys
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from src.amcm.boxes import read_box_file
from src.amcm.service import train_amcm
from src.autoenc.service import train_tvae, train_vae
from src.config import CODE_VERSION, RunConfig, Settings, config_hash, get_settings, load_run_config
from src.dataio.io import read_rgba_image
from src.dataio.service import DatasetBuilder
from src.dependencies import (
    RunPaths,
    get_autoencoder,
    get_backbone,
    get_dataset,
    get_partial_pipeline,
    get_pipeline,
    require_checkpoint,
    require_dataset,
    upstream_digests,
)
from src.evalkit.constants import METHOD_CHROMA_KEY, METHOD_WITH_AMCM, METHOD_WITHOUT_AMCM, STAGE1_REPORT
from src.evalkit.exceptions import IncompleteReportError
from src.evalkit.service import AblationRunner, evaluate_stage1, write_report
from src.evalkit.strategies import methods_for
from src.exceptions import EXIT_OK, ConfigError, TVDMError
from src.log import configure_logging
from src.pipeline.schemas import GenerationRequest
from src.pipeline.service import save_generation
from src.training.schemas import TrainResult
from src.training.seeding import stage_streams
from src.vdm.service import train_vdm

from .exceptions import RunDirectoryError
from .schemas import CommandRecord, RunRecord

logger = logging.getLogger(__name__)


@dataclass
class CommandContext:
    """Everything a command handler gets."""

    args: argparse.Namespace
    config: RunConfig
    paths: RunPaths
    settings: Settings

    @property
    def debug(self) -> bool:
        return self.settings.debug or self.config.debug


@dataclass
class CommandOutcome:
    outputs: list[Path] = field(default_factory=list)
    digests: dict[str, str] = field(default_factory=dict)


def parse_set_overrides(pairs: list[str]) -> dict[str, str]:
    """
    ``["lr=1e-4", "frames=4"]`` -> ``{"lr": "1e-4", "frames": "4"}``.

    Raises:
        ConfigError: A pair without ``=``
    """
    out: dict[str, str] = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got '{pair}'")
        key, value = (part.strip() for part in pair.split("=", 1))
        out[key] = value
    return out


def read_run_record(paths: RunPaths) -> RunRecord | None:
    if not paths.run_record.exists():
        return None
    return RunRecord.model_validate_json(paths.run_record.read_text(encoding="utf-8"))


def resolve_config(args: argparse.Namespace, record: RunRecord | None) -> RunConfig:
    """run.json record, then --paper-scale, then --config file, then --seed/--set."""
    overrides: dict[str, Any] = parse_set_overrides(args.set or [])
    if args.seed is not None:
        overrides["seed"] = args.seed
    return load_run_config(
        config_file=args.config,
        overrides=overrides,
        paper_scale=args.paper_scale,
        base=record.config if record is not None else None,
    )


def guard_output(path: Path, force: bool) -> None:
    """
    Raises:
        RunDirectoryError: ``path`` exists and ``force`` is off
    """
    if path.exists() and not force:
        raise RunDirectoryError(str(path))


def _trained(result: TrainResult) -> CommandOutcome:
    return CommandOutcome(outputs=[Path(result.checkpoint)], digests={result.stage: result.digest})


def cmd_gen_data(ctx: CommandContext) -> CommandOutcome:
    guard_output(ctx.paths.manifest, ctx.args.force)
    DatasetBuilder(ctx.config, threads=ctx.settings.threads).build(ctx.paths.data_dir)
    return CommandOutcome(outputs=[ctx.paths.manifest])


def cmd_train_vae(ctx: CommandContext) -> CommandOutcome:
    paths, config = ctx.paths, ctx.config
    require_dataset(paths)
    guard_output(paths.checkpoint("vae"), ctx.args.force)
    dataset = get_dataset(paths, config, "train", ctx.settings.threads)
    result = train_vae(
        dataset.frames,
        config,
        stage_streams(config.seed, "vae"),
        paths.checkpoint("vae"),
        paths.history("vae"),
    )
    return _trained(result)


def cmd_train_tvae(ctx: CommandContext) -> CommandOutcome:
    paths, config = ctx.paths, ctx.config
    vae_ckpt = require_checkpoint(paths, "vae")
    guard_output(paths.checkpoint("tvae"), ctx.args.force)
    dataset = get_dataset(paths, config, "train", ctx.settings.threads)
    result = train_tvae(
        dataset.frames,
        config,
        vae_ckpt,
        stage_streams(config.seed, "tvae"),
        paths.checkpoint("tvae"),
        paths.history("tvae"),
        upstream=upstream_digests(paths, ["vae"]),
        debug=ctx.debug,
    )
    return _trained(result)


def cmd_train_vdm(ctx: CommandContext) -> CommandOutcome:
    paths, config = ctx.paths, ctx.config
    autoencoder = get_autoencoder(paths, config)
    guard_output(paths.checkpoint("vdm"), ctx.args.force)
    dataset = get_dataset(paths, config, "train", ctx.settings.threads)
    result = train_vdm(
        dataset,
        config,
        autoencoder,
        stage_streams(config.seed, "vdm"),
        paths.checkpoint("vdm"),
        paths.history("vdm"),
        upstream=upstream_digests(paths, ["vae", "tvae"]),
        debug=ctx.debug,
    )
    return _trained(result)


def cmd_train_amcm(ctx: CommandContext) -> CommandOutcome:
    paths, config = ctx.paths, ctx.config
    backbone = get_backbone(paths, config)
    autoencoder = get_autoencoder(paths, config)
    guard_output(paths.checkpoint("amcm"), ctx.args.force)
    dataset = get_dataset(paths, config, "train", ctx.settings.threads)
    result = train_amcm(
        dataset,
        config,
        autoencoder,
        backbone,
        stage_streams(config.seed, "amcm"),
        paths.checkpoint("amcm"),
        paths.history("amcm"),
        upstream=upstream_digests(paths, ["vae", "tvae", "vdm"]),
        debug=ctx.debug,
    )
    return _trained(result)


def cmd_generate(ctx: CommandContext) -> CommandOutcome:
    paths, config, args = ctx.paths, ctx.config, ctx.args
    use_amcm = not args.no_amcm
    pipeline = get_pipeline(paths, config, with_adapter=use_amcm)
    out_dir = paths.generated_dir / (args.name or f"seed-{config.seed}")
    guard_output(out_dir, args.force)

    if not args.image.exists():
        raise ConfigError(f"conditioned image not found: {args.image}", key="image")
    cond = read_rgba_image(args.image)
    override = read_box_file(args.boxes, frames=config.frames) if args.boxes else None
    request = GenerationRequest(prompt=args.prompt, seed=config.seed, use_amcm=use_amcm)
    video = pipeline.generate(cond, request, boxes_override=override)

    stages = ["vae", "tvae", "vdm"] + (["amcm"] if use_amcm else [])
    save_generation(video, out_dir, config, upstream=upstream_digests(paths, stages))
    return CommandOutcome(outputs=[out_dir])


def cmd_evaluate(ctx: CommandContext) -> CommandOutcome:
    paths, config = ctx.paths, ctx.config
    autoencoder = get_autoencoder(paths, config)
    out = paths.metrics_dir / STAGE1_REPORT
    guard_output(out, ctx.args.force)
    dataset = get_dataset(paths, config, "eval", ctx.settings.threads, limit=ctx.args.limit)
    report = evaluate_stage1(autoencoder, dataset, config)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report.model_dump_json(indent=2), encoding="utf-8")
    logger.info("Stage-1 evaluation", extra=report.model_dump())
    return CommandOutcome(outputs=[out])


def cmd_ablate(ctx: CommandContext) -> CommandOutcome:
    """
    Ablation report; written even when a method is missing.

    Raises:
        IncompleteReportError: After writing, if any requested method has no row
    """
    paths, config, args = ctx.paths, ctx.config, ctx.args
    guard_output(paths.metrics_dir / "ablation.jsonl", args.force)
    names = [METHOD_WITH_AMCM, METHOD_WITHOUT_AMCM] + ([METHOD_CHROMA_KEY] if args.baseline else [])
    methods = methods_for(names, config.chroma_tolerance)
    dataset = get_dataset(paths, config, "eval", ctx.settings.threads, limit=args.limit)

    runner = AblationRunner(get_partial_pipeline(paths, config), config, ctx.settings.threads)
    report = runner.run(dataset, methods, dataset_name=f"{paths.root.name}/eval")
    jsonl, table = write_report(report, paths.metrics_dir)
    print(table.read_text(encoding="utf-8"), end="")
    if report.missing_methods:
        raise IncompleteReportError(report.missing_methods)
    return CommandOutcome(outputs=[jsonl, table])


COMMANDS: dict[str, tuple[Callable[[CommandContext], CommandOutcome], str]] = {
    "gen-data": (cmd_gen_data, "Generate the procedural sprite dataset"),
    "train-vae": (cmd_train_vae, "Stage 0: train the vanilla VAE"),
    "train-tvae": (cmd_train_tvae, "Stage 1: train the transparent VAE"),
    "train-vdm": (cmd_train_vdm, "Stage 1.5: pretrain the toy video diffusion backbone"),
    "train-amcm": (cmd_train_amcm, "Stage 2: train AMCM against the frozen backbone"),
    "generate": (cmd_generate, "Generate an RGBA video from a conditioned image and prompt"),
    "evaluate": (cmd_evaluate, "Held-out transparent autoencoder quality"),
    "ablate": (cmd_ablate, "With/without-AMCM report (and optional chroma-key baseline)"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value configuration file")
    common.add_argument("--seed", type=int, help="Root seed (overrides the config)")
    common.add_argument("--out", type=Path, default=Path("runs/default"), help="Run directory")
    common.add_argument("--paper-scale", action="store_true", help="Start from the full-scale preset")
    common.add_argument("--force", action="store_true", help="Overwrite existing outputs")
    common.add_argument(
        "--set", action="append", metavar="KEY=VALUE", help="Override one config key (repeatable)"
    )

    parser = argparse.ArgumentParser(prog="tvdm", description="Transparent video diffusion toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    parsers = {
        name: sub.add_parser(name, parents=[common], help=help_text)
        for name, (_, help_text) in COMMANDS.items()
    }

    gen = parsers["generate"]
    gen.add_argument("--image", type=Path, required=True, help="Conditioned RGBA image")
    gen.add_argument("--prompt", default="", help="Caption, e.g. 'a red circle drifting right'")
    gen.add_argument("--boxes", type=Path, help="Box file overriding the derived constraint")
    gen.add_argument("--no-amcm", action="store_true", help="Generate with the backbone alone")
    gen.add_argument("--name", help="Output directory name under generated/")

    for name in ("evaluate", "ablate"):
        parsers[name].add_argument("--limit", type=int, help="Use only the first N eval videos")
    parsers["ablate"].add_argument(
        "--baseline", action="store_true", help="Add the green-screen + chroma-key baseline row"
    )
    return parser


def record_command(
    paths: RunPaths, record: RunRecord | None, config: RunConfig, command: str, outcome: CommandOutcome
) -> RunRecord:
    """Append the command to ``run.json``, creating it on first use."""
    if record is None:
        record = RunRecord(
            code_version=CODE_VERSION,
            seed=config.seed,
            config=config.to_record(),
            config_hash=config_hash(config),
        )
    record.commands.append(
        CommandRecord(
            command=command,
            config_hash=config_hash(config),
            outputs=[str(p) for p in outcome.outputs],
            digests=outcome.digests,
        )
    )
    paths.run_record.write_text(record.model_dump_json(indent=2), encoding="utf-8")
    return record


def main(argv: list[str] | None = None) -> int:
    """
    Run one command; returns the process exit code.

    0 ok, 2 usage or config error, 3 missing upstream stage, 4 numeric failure.
    """
    args = build_parser().parse_args(argv)
    settings = get_settings()
    paths = RunPaths(args.out)
    paths.root.mkdir(parents=True, exist_ok=True)
    configure_logging(settings.log_level, paths.log_file(args.command))

    handler, _ = COMMANDS[args.command]
    try:
        record = read_run_record(paths)
        config = resolve_config(args, record)
        logger.info(
            "Command started",
            extra={"command": args.command, "run": str(paths.root), "config_hash": config_hash(config)},
        )
        outcome = handler(CommandContext(args=args, config=config, paths=paths, settings=settings))
        record_command(paths, record, config, args.command, outcome)
    except TVDMError as exc:
        logger.error(
            "Command failed",
            extra={"command": args.command, "error": exc.message, "exit_code": exc.exit_code},
        )
        print(f"error: {exc.message}", file=sys.stderr)
        return exc.exit_code
    logger.info("Command finished", extra={"command": args.command})
    return EXIT_OK
