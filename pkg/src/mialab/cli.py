"""Command-line entry point binding all modules.

Workspace layout: ws/corpora, ws/checkpoints, ws/generated, ws/scores,
ws/reports. Exit codes: 0 success, 1 validation error, 2 runtime failure.
All randomness flows from --seed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from mialab.errors import (
    ConfigError,
    DataError,
    DimensionError,
    MialabError,
    SizeError,
)
from mialab.experiments.config import SCALES, WORKSPACE_ENV

log = logging.getLogger("mialab")


def _add_workspace_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--workspace",
        default=None,
        help=f"workspace directory (default: ${WORKSPACE_ENV} or ./ws)",
    )
    p.add_argument("--seed", type=int, default=1, help="global seed (default: 1)")
    p.add_argument(
        "--scale",
        default="desk",
        choices=sorted(SCALES),
        help="desk-scale preset (default: desk)",
    )
    p.add_argument("--workers", type=int, default=1, help="parallel row workers (default: 1)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mialab",
        description="Desk-scale membership inference lab for fine-tuned latent diffusion models",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a procedural face corpus")
    p.add_argument("--inst", required=True, choices=["A", "B", "WILD"], help="institution tag")
    p.add_argument("--count", type=int, required=True, help="number of images")
    p.add_argument("--seed", type=int, required=True, help="corpus seed")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--size", type=int, default=32, help="image size (default: 32)")
    p.add_argument(
        "--watermark", choices=["none", "visible", "hidden"], default="none",
        help="watermark the corpus after generation (default: none)",
    )

    p = sub.add_parser("train-base", help="pretrain autoencoder + denoiser on a corpus")
    p.add_argument("--corpus", required=True, help="manifest.jsonl of the training corpus")
    p.add_argument("--out", required=True, help="output checkpoint path")
    p.add_argument("--config", default=None, help="JSON training config file")
    p.add_argument("--seed", type=int, default=0, help="training seed (default: 0)")

    p = sub.add_parser("finetune", help="fine-tune a base checkpoint on a target corpus")
    p.add_argument("--base", required=True, help="base checkpoint path")
    p.add_argument("--target", required=True, help="manifest.jsonl of the target corpus")
    p.add_argument("--epochs", type=int, required=True, help="fine-tuning epochs")
    p.add_argument("--out", required=True, help="output checkpoint path")
    p.add_argument("--seed", type=int, default=0, help="training seed (default: 0)")
    p.add_argument(
        "--allow-prefix-mismatch", action="store_true",
        help="warn instead of failing when captions do not share a prefix",
    )

    p = sub.add_parser("sample", help="generate images from a checkpoint")
    p.add_argument("--ckpt", required=True, help="diffusion checkpoint path")
    p.add_argument("--prompt", required=True, help="text prompt")
    p.add_argument("--count", type=int, default=25, help="images to generate (default: 25)")
    p.add_argument("--steps", type=int, default=50, help="inference steps (default: 50)")
    p.add_argument("--guidance", type=float, default=7.5, help="guidance scale (default: 7.5)")
    p.add_argument("--seed", type=int, required=True, help="sampling seed")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("train-attack", help="train the membership classifier")
    p.add_argument("--pos", required=True, help="manifest.jsonl of training positives")
    p.add_argument("--neg", required=True, help="manifest.jsonl of training negatives")
    p.add_argument("--out", required=True, help="output checkpoint path")
    p.add_argument("--seed", type=int, default=0, help="training seed (default: 0)")
    p.add_argument("--epochs", type=int, default=25, help="training epochs (default: 25)")

    p = sub.add_parser("score", help="score a manifest with an attack checkpoint")
    p.add_argument("--ckpt", required=True, help="attack checkpoint path")
    p.add_argument("--manifest", required=True, help="manifest.jsonl to score")
    p.add_argument("--out", default=None, help="output JSONL (default: stdout)")
    p.add_argument("--label", choices=["member", "non-member"], default=None,
                   help="attach a ground-truth label to every record")

    p = sub.add_parser("eval-auc", help="AUC from JSONL score files")
    p.add_argument("scores", nargs="?", default=None, help="JSONL with p and label fields")
    p.add_argument("--pos", default=None, help="JSONL of member scores")
    p.add_argument("--neg", default=None, help="JSONL of non-member scores")
    p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("fid", help="FID between two manifests")
    p.add_argument("--a", required=True, help="first manifest.jsonl")
    p.add_argument("--b", required=True, help="second manifest.jsonl")
    p.add_argument("--extractor-seed", type=int, default=0, help="feature embedder seed")
    p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("run-experiment", help="run one matrix row end to end")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--row", type=int, help="row number 1-13")
    g.add_argument("--spec", help="JSON experiment spec file")
    _add_workspace_args(p)

    p = sub.add_parser("run-matrix", help="run the full 13-row matrix")
    p.add_argument("--rows", default=None, help="comma-separated row subset, e.g. 1,4,11")
    p.add_argument("--specs-dir", default=None, help="directory of row JSON specs")
    _add_workspace_args(p)

    p = sub.add_parser("sweep", help="guidance-scale sweep")
    p.add_argument("--scales", default="0,4,8,12,16", help="comma-separated guidance scales")
    _add_workspace_args(p)

    p = sub.add_parser("report", help="print the results table from a workspace")
    p.add_argument("--workspace", default=None, help=f"workspace (default: ${WORKSPACE_ENV} or ./ws)")
    p.add_argument("--json", action="store_true", help="machine-readable output")

    return ap


def _cmd_gen_data(args) -> int:
    from mialab.synthdata.faces import CorpusSpec, gen_corpus
    from mialab.synthdata.watermark import WatermarkSpec, watermark_manifest

    spec = CorpusSpec(institution=args.inst, count=args.count, seed=args.seed, size=args.size)
    manifest = gen_corpus(spec, args.out)
    if args.watermark != "none":
        wm = WatermarkSpec.visible() if args.watermark == "visible" else WatermarkSpec.hidden()
        out = Path(args.out) / f"watermarked-{args.watermark}"
        manifest = watermark_manifest(manifest, wm, out)
        print(f"wrote {len(manifest)} watermarked images to {out}")
    else:
        print(f"wrote {len(manifest)} images to {args.out}")
    return 0


def _cmd_train_base(args) -> int:
    from mialab.ldm.train import TrainConfig, train_base
    from mialab.synthdata.manifest import DatasetManifest

    cfg = TrainConfig.from_json(Path(args.config)) if args.config else TrainConfig()
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=args.seed)
    ckpt = train_base(DatasetManifest.load(args.corpus), cfg)
    ckpt.save(args.out)
    print(f"base checkpoint -> {args.out} (recon_mae={ckpt.meta['recon_mae']:.4f})")
    return 0


def _cmd_finetune(args) -> int:
    from mialab.ldm.checkpoint import DiffusionCheckpoint
    from mialab.ldm.train import finetune
    from mialab.synthdata.manifest import DatasetManifest

    ckpt = finetune(
        DiffusionCheckpoint.load(args.base),
        DatasetManifest.load(args.target),
        epochs=args.epochs,
        seed=args.seed,
        warn_on_prefix_mismatch=args.allow_prefix_mismatch,
    )
    ckpt.save(args.out)
    print(f"fine-tuned checkpoint -> {args.out} ({args.epochs} epochs)")
    return 0


def _cmd_sample(args) -> int:
    from mialab.ldm.checkpoint import DiffusionCheckpoint
    from mialab.ldm.sample import SampleRequest, sample

    req = SampleRequest(
        prompt=args.prompt,
        seed=args.seed,
        count=args.count,
        steps=args.steps,
        guidance_scale=args.guidance,
    )
    _, manifest = sample(DiffusionCheckpoint.load(args.ckpt), req, args.out)
    print(f"wrote {len(manifest)} images to {args.out}")
    return 0


def _cmd_train_attack(args) -> int:
    from mialab.attack import AttackTrainConfig, AttackTrainSet, train_attack
    from mialab.synthdata.manifest import DatasetManifest

    ckpt = train_attack(
        AttackTrainSet(
            positives=DatasetManifest.load(args.pos),
            negatives=DatasetManifest.load(args.neg),
            seed=args.seed,
        ),
        AttackTrainConfig(epochs=args.epochs),
    )
    ckpt.save(args.out)
    print(
        f"attack checkpoint -> {args.out} "
        f"(best epoch {ckpt.meta['best_epoch']}, val loss {ckpt.meta['best_val_loss']:.4f})"
    )
    return 0


def _cmd_score(args) -> int:
    from mialab.attack import AttackCheckpoint, predict_manifest
    from mialab.synthdata.manifest import DatasetManifest

    pairs = predict_manifest(AttackCheckpoint.load(args.ckpt), DatasetManifest.load(args.manifest))
    lines = []
    for image_id, p in pairs:
        obj = {"image_id": image_id, "p": p}
        if args.label:
            obj["label"] = args.label
        lines.append(json.dumps(obj))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {len(pairs)} scores to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _load_scores(path: str, label: int | None = None) -> list[tuple[float, int]]:
    out = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        if label is not None:
            lab = label
        else:
            if "label" not in obj:
                raise DataError(f"{path}: records need a label field (or use --pos/--neg)")
            lab = 1 if obj["label"] == "member" else 0
        out.append((float(obj.get("p", obj.get("score"))), lab))
    return out


def _cmd_eval_auc(args) -> int:
    from mialab.metrics import roc_auc

    if args.scores and (args.pos or args.neg):
        raise ConfigError("give either a single scores file or --pos/--neg, not both")
    if args.scores:
        pairs = _load_scores(args.scores)
    elif args.pos and args.neg:
        pairs = _load_scores(args.pos, label=1) + _load_scores(args.neg, label=0)
    else:
        raise ConfigError("need a scores file or both --pos and --neg")
    scores = [s for s, _ in pairs]
    labels = [l for _, l in pairs]
    auc = roc_auc(scores, labels)
    n_pos, n_neg = sum(labels), len(labels) - sum(labels)
    if args.json:
        print(json.dumps({"auc": auc, "n_pos": n_pos, "n_neg": n_neg}))
    else:
        print(f"AUC {auc:.6f} ({n_pos} members, {n_neg} non-members)")
    return 0


def _cmd_fid(args) -> int:
    from mialab.metrics import extract_features, fid
    from mialab.synthdata.manifest import DatasetManifest

    fa = extract_features(DatasetManifest.load(args.a).load_images(), args.extractor_seed)
    fb = extract_features(DatasetManifest.load(args.b).load_images(), args.extractor_seed)
    value = fid(fa, fb)
    if args.json:
        print(json.dumps({"fid": value, "n_a": fa.n, "n_b": fb.n}))
    else:
        print(f"FID {value:.6f} ({fa.n} vs {fb.n} images)")
    return 0


def _run_config(args):
    from mialab.experiments.config import RunConfig

    return RunConfig.create(
        workspace=args.workspace, seed=args.seed, scale=args.scale, workers=args.workers
    )


def _cmd_run_experiment(args) -> int:
    from mialab.experiments.runner import run_experiment
    from mialab.experiments.specs import ExperimentSpec, default_matrix

    rc = _run_config(args)
    if args.row is not None:
        matching = [s for s in default_matrix() if s.id == str(args.row)]
        if not matching:
            raise ConfigError(f"no matrix row {args.row}")
        spec = matching[0]
    else:
        spec = ExperimentSpec.from_dict(json.loads(Path(args.spec).read_text()))
    result = run_experiment(spec, rc)
    print(
        f"row {result.spec_id}: AUC {result.auc_mean:.3f} ± {result.auc_half_width:.3f} "
        f"(baseline {result.baseline_auc:.3f}) in {result.seconds:.0f}s"
    )
    return 0


def _cmd_run_matrix(args) -> int:
    from mialab.experiments.runner import run_matrix
    from mialab.experiments.specs import default_matrix, load_specs_dir

    rc = _run_config(args)
    specs = load_specs_dir(args.specs_dir) if args.specs_dir else default_matrix()
    if args.rows:
        wanted = {r.strip() for r in args.rows.split(",")}
        specs = [s for s in specs if s.id in wanted]
        if not specs:
            raise ConfigError(f"no rows match {args.rows!r}")
    results, failures = run_matrix(specs, rc)
    print(f"{len(results)} rows done, {len(failures)} failed -> {rc.workspace}/reports/results.csv")
    for r in results:
        print(f"  row {r.spec_id:>2}: AUC {r.auc_mean:.3f} ± {r.auc_half_width:.3f}")
    for f in failures:
        print(f"  row {f['id']}: FAILED ({f['error']})")
    return 0 if not failures else 2


def _cmd_sweep(args) -> int:
    from mialab.experiments.runner import guidance_sweep

    rc = _run_config(args)
    scales = tuple(float(s) for s in args.scales.split(","))
    result = guidance_sweep(rc, scales)
    for s, auc, hw, f in zip(result.scales, result.auc_means, result.auc_half_widths, result.fids):
        print(f"  s={s:g}: AUC {auc:.3f} ± {hw:.3f}, FID {f:.3f}")
    corr = result.spearman_auc_fid
    print(f"Spearman(AUC, FID) = {'undefined' if corr is None else f'{corr:.3f}'}")
    return 0 if not result.failures else 2


def _cmd_report(args) -> int:
    import csv as csv_mod
    import os

    ws = Path(args.workspace or os.environ.get(WORKSPACE_ENV, "ws"))
    path = ws / "reports" / "results.csv"
    if not path.exists():
        raise DataError(f"no results at {path}; run run-matrix first")
    with open(path) as f:
        rows = list(csv_mod.DictReader(f))
    if args.json:
        print(json.dumps(rows))
    else:
        md = ws / "reports" / "results.md"
        print(md.read_text() if md.exists() else json.dumps(rows, indent=2))
    return 0


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "train-base": _cmd_train_base,
    "finetune": _cmd_finetune,
    "sample": _cmd_sample,
    "train-attack": _cmd_train_attack,
    "score": _cmd_score,
    "eval-auc": _cmd_eval_auc,
    "fid": _cmd_fid,
    "run-experiment": _cmd_run_experiment,
    "run-matrix": _cmd_run_matrix,
    "sweep": _cmd_sweep,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    from mialab.seeding import pin_torch_runtime

    pin_torch_runtime()
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, DataError, DimensionError, SizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except MialabError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
