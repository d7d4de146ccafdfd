"""Command-line harness.

Subcommands: train, eval, analyze, validate-pairs, serve-annot, report.
Exit codes: 0 success, 1 validation failure (paired-RE violations), 2 usage
or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import data as dio
from .evaluate import (
    EvalDocument,
    EvalOptions,
    ModelPredictor,
    OraclePredictor,
    StoredPredictor,
    evaluate_dataset,
    load_voted_annotations,
)
from .model import (
    ConfigError,
    GroundedSegmenter,
    Tokenizer,
    TrainSample,
    build_vocab,
    load_checkpoint,
    load_training_config,
    run_mlm_warmup,
    save_checkpoint,
    train_segmentation,
)
from .report import (
    AnalysisDocument,
    analyze_annotations,
    render_analysis_text,
    render_eval_text,
    save_analysis_figures,
    save_eval_figures,
    write_analysis_outputs,
    write_eval_outputs,
)
from .taxonomy import AnnotationRecord, PairedRE, validate_pair, EmptyInput
from .metrics import EmptySequence

USAGE_ERROR = 2
VALIDATION_FAILURE = 1


def _read_jsonl(path, parser):
    items = []
    with open(path, encoding="utf-8") as stream:
        for line_no, line in enumerate(stream, start=1):
            if not line.strip():
                continue
            try:
                items.append(parser(json.loads(line)))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{line_no}: {exc}") from exc
    return items


def build_train_samples(manifest: dio.DatasetManifest, tokenizer: Tokenizer):
    """Every (instance, phrase, frame) triple becomes one training sample."""
    samples = []
    for instance in dio.load_dataset(manifest):
        gts = dio.load_gt_masks(manifest, instance)
        images = [
            dio.load_frame_image(manifest, instance.video_id, frame)
            for frame in instance.frames
        ]
        for phrase_id in sorted(instance.phrases):
            tokens = tokenizer.encode(instance.phrases[phrase_id].text)
            for image, mask in zip(images, gts):
                samples.append(TrainSample(image=image, tokens=tokens, mask=mask))
    return samples


def cmd_train(args) -> int:
    import torch

    config = load_training_config(args.config)
    if args.seed is not None:
        config.schedule.seed = args.seed
    if config.manifest is None:
        raise ConfigError("training config must point at a dataset manifest")
    manifest_path = Path(args.config).parent / config.manifest
    manifest = dio.DatasetManifest.load(manifest_path)

    instances = dio.load_dataset(manifest)
    phrases = [p.text for inst in instances for p in inst.phrases.values()]
    vocab = build_vocab(phrases, max_size=config.model.vocab_size)
    config.model.vocab_size = len(vocab)
    tokenizer = Tokenizer(vocab, max_tokens=config.model.max_tokens)

    torch.manual_seed(config.schedule.seed)
    model = GroundedSegmenter(config.model)
    samples = build_train_samples(manifest, tokenizer)

    out_dir = Path(args.config).parent / config.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    log: list[dict] = []

    generator = torch.Generator().manual_seed(config.schedule.seed)
    if config.schedule.mlm_first:
        token_seqs = [tokenizer.encode(text) for text in phrases]
        for step, loss in enumerate(
            run_mlm_warmup(model, token_seqs, config.schedule, generator)
        ):
            log.append({"phase": "mlm", "step": step, "loss": loss})
    history = train_segmentation(model, samples, config.schedule, generator)
    log.extend({"phase": "segmentation", **entry} for entry in history)

    checkpoint_path = save_checkpoint(out_dir / "checkpoint.ckpt", model, vocab)
    log_path = out_dir / "train_log.jsonl"
    log_path.write_text("".join(json.dumps(e) + "\n" for e in log), encoding="utf-8")

    from .model import mean_train_iou

    final_iou = mean_train_iou(model, samples)
    print(f"trained {config.schedule.steps} steps on {len(samples)} samples")
    print(f"final train mean IoU: {final_iou:.3f}")
    print(f"checkpoint: {checkpoint_path}")
    print(f"log: {log_path}")
    return 0


def cmd_eval(args) -> int:
    manifest = dio.DatasetManifest.load(args.manifest)
    chosen = [bool(args.oracle), args.checkpoint is not None, args.predictions is not None]
    if sum(chosen) != 1:
        print("eval needs exactly one of --oracle, --checkpoint, --predictions", file=sys.stderr)
        return USAGE_ERROR
    if args.oracle:
        predictor = OraclePredictor()
    elif args.predictions:
        predictor = StoredPredictor(args.predictions)
    else:
        model, vocab = load_checkpoint(args.checkpoint)
        predictor = ModelPredictor(model, vocab, checkpoint_name=Path(args.checkpoint).stem)

    modes = tuple(
        ("generic", "actor", "action", "actor_action", "full")
        if args.phrase_mode == "all"
        else args.phrase_mode.split(",")
    )
    group_by = tuple(g for g in args.group_by.split(",") if g) if args.group_by else ()
    options = EvalOptions(
        phrase_modes=modes,
        group_by=group_by,
        re_aggregation=args.re_aggregation,
        tolerance=args.tolerance,
    )
    document = evaluate_dataset(manifest, predictor, options)
    outputs = write_eval_outputs(document, args.out)
    print(render_eval_text(document))
    print(f"report: {outputs['json']}")
    return 0


def cmd_analyze(args) -> int:
    records = _read_jsonl(args.annotations, AnnotationRecord.from_json)
    if not records:
        raise EmptyInput(f"no annotation records in {args.annotations}")
    document = analyze_annotations(records)
    outputs = write_analysis_outputs(document, args.out)
    print(render_analysis_text(document))
    print(f"stats: {outputs['json']}")
    return 0


def cmd_validate_pairs(args) -> int:
    pairs = _read_jsonl(args.pairs, PairedRE.from_json)
    voted = load_voted_annotations(args.annotations)
    violations = []
    for pair in pairs:
        phrase_sets = {
            phrase_id: item.categories
            for (instance_id, phrase_id), item in voted.items()
            if instance_id == pair.instance_id
        }
        violation = validate_pair(pair, phrase_sets)
        if violation is not None:
            violations.append(violation)
    if violations:
        for v in violations:
            print(
                f"violation {v.pair.instance_id} {v.pair.base_phrase_id}->"
                f"{v.pair.variant_phrase_id} ({v.pair.toggled_category}): {v.reason}"
            )
        print(f"{len(violations)} of {len(pairs)} pairs invalid")
        return VALIDATION_FAILURE
    print(f"all {len(pairs)} pairs consistent")
    return 0


def cmd_serve_annot(args) -> int:
    import uvicorn

    from .service import AnnotationStore, build_tasks, create_app, load_tasks, save_tasks

    store_dir = Path(args.store)
    meta_path = store_dir / "config.json"
    if args.manifest:
        manifest = dio.DatasetManifest.load(args.manifest)
        tasks = build_tasks(manifest)
        save_tasks(tasks, store_dir)
        meta_path.write_text(
            json.dumps({"frames_root": str(manifest.frames_root)}), encoding="utf-8"
        )
        frames_root = manifest.frames_root
    else:
        tasks = load_tasks(store_dir)
        if not meta_path.exists():
            raise FileNotFoundError(f"{meta_path} not found; run once with --manifest")
        frames_root = Path(json.loads(meta_path.read_text(encoding="utf-8"))["frames_root"])

    store = AnnotationStore(store_dir)
    app = create_app(store, tasks, frames_root)
    print(f"serving {len(tasks)} tasks from {store_dir} on port {args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_report(args) -> int:
    in_dir = Path(args.in_dir)
    eval_path = in_dir / "report.json"
    stats_path = in_dir / "stats.json"
    if eval_path.exists():
        document = EvalDocument.from_json(json.loads(eval_path.read_text(encoding="utf-8")))
        if args.format == "json":
            print(json.dumps(document.to_json(), indent=1, sort_keys=True))
        else:
            print(render_eval_text(document))
        save_eval_figures(document, in_dir / "figures")
        return 0
    if stats_path.exists():
        document = AnalysisDocument.from_json(json.loads(stats_path.read_text(encoding="utf-8")))
        if args.format == "json":
            print(json.dumps(document.to_json(), indent=1, sort_keys=True))
        else:
            print(render_analysis_text(document))
        save_analysis_figures(document, in_dir / "figures")
        return 0
    raise FileNotFoundError(f"no report.json or stats.json under {in_dir}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="langseg",
        description="Language-guided video object segmentation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate predictions against a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--checkpoint")
    p.add_argument("--predictions")
    p.add_argument("--oracle", action="store_true",
                   help="score the ground truth against itself (format checks)")
    p.add_argument("--phrase-mode", default="full",
                   help="full|generic|actor|action|actor_action, comma list, or 'all'")
    p.add_argument("--group-by", default="",
                   help="comma list out of: difficulty, category")
    p.add_argument("--re-aggregation", default="per_re",
                   choices=("per_re", "mean", "best"),
                   help="unit of scoring: each RE, or mean/best over an object's REs")
    p.add_argument("--tolerance", type=int, default=None,
                   help="boundary match radius in pixels (default: 0.8%% of diagonal)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("analyze", help="annotation corpus statistics")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("validate-pairs", help="check paired-RE consistency")
    p.add_argument("--pairs", required=True)
    p.add_argument("--annotations", required=True)
    p.set_defaults(func=cmd_validate_pairs)

    p = sub.add_parser("serve-annot", help="run the annotation backend")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--store", required=True)
    p.add_argument("--manifest", help="(re)build the task list from this manifest")
    p.set_defaults(func=cmd_serve_annot)

    p = sub.add_parser("report", help="re-render a saved report")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--format", choices=("json", "txt"), default="txt")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, EmptyInput, EmptySequence, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
