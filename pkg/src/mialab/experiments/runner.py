"""Experiment execution: single rows, the 13-row matrix, the guidance sweep,
and the dilution study.

Per seed: build the attack training set from the spec's selectors, train,
score the held-out test union, compute AUC; then a Student-t interval over
seeds. The prototype baseline is computed once per row (it has no training
seed) from 16 exemplars per class that are excluded from the scored test
sets. FID, when defined, compares the training positives against the
fine-tune target corpus.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from mialab.attack import AttackTrainConfig, AttackTrainSet, predict_manifest, train_attack
from mialab.errors import DataError, IntegrityError, MialabError
from mialab.experiments.config import RunConfig, ScaleConfig
from mialab.experiments.registry import Registry
from mialab.experiments.specs import ExperimentSpec, default_matrix, row4_spec
from mialab.metrics import confidence_interval, extract_features, fid, roc_auc
from mialab.metrics.baseline import PROTOTYPE_EXEMPLARS, baseline_scores, build_prototypes
from mialab.metrics.rank import spearman
from mialab.seeding import derive_seed, pin_torch_runtime
from mialab.synthdata.manifest import DatasetManifest
from mialab.synthdata.ppm import read_ppm

log = logging.getLogger(__name__)


@dataclass
class ExperimentResult:
    spec_id: str
    name: str
    train_pos: str
    train_neg: str
    test_pos: str
    test_neg: str
    per_seed_aucs: list[float]
    auc_mean: float
    auc_half_width: float
    baseline_auc: float
    fid_to_target: float | None
    seconds: float

    def to_dict(self) -> dict:
        return asdict(self)


def _write_scores(path: Path, rows: list[tuple[str, float, int]]) -> None:
    lines = [
        json.dumps({"image_id": i, "p": p, "label": "member" if l else "non-member"})
        for i, p, l in rows
    ]
    path.write_text("\n".join(lines) + ("\n" if lines else ""))


def _exemplar_split(manifest: DatasetManifest) -> tuple[list, list]:
    recs = manifest.sorted_records()
    if len(recs) <= PROTOTYPE_EXEMPLARS:
        raise DataError(
            f"test set of {len(recs)} records cannot spare {PROTOTYPE_EXEMPLARS} exemplars"
        )
    return recs[:PROTOTYPE_EXEMPLARS], recs[PROTOTYPE_EXEMPLARS:]


def run_experiment(
    spec: ExperimentSpec, rc: RunConfig, registry: Registry | None = None
) -> ExperimentResult:
    pin_torch_runtime()
    t0 = time.perf_counter()
    reg = registry or Registry(rc)
    selectors = (spec.train_pos, spec.train_neg, spec.test_pos, spec.test_neg)
    for sel in selectors:
        reg._dataset_plan(sel)  # fail fast on unresolvable names

    train_pos = reg.dataset(spec.train_pos)
    train_neg = reg.dataset(spec.train_neg)
    test_pos = reg.dataset(spec.test_pos)
    test_neg = reg.dataset(spec.test_neg)

    overlap = test_pos.ids() & test_neg.ids()
    if overlap:
        raise IntegrityError(
            f"test sets overlap on {len(overlap)} ids (e.g. {sorted(overlap)[:3]})"
        )

    ex_pos, scored_pos_recs = _exemplar_split(test_pos)
    ex_neg, scored_neg_recs = _exemplar_split(test_neg)
    scored_pos = DatasetManifest(scored_pos_recs)
    scored_neg = DatasetManifest(scored_neg_recs)

    seeds = spec.seeds if spec.seeds is not None else rc.scale.seeds
    attack_cfg = AttackTrainConfig(epochs=rc.scale.attack_epochs, class_cap=rc.scale.gen_count)
    scores_dir = reg.ws / "scores"
    aucs = []
    for k in seeds:
        ts = AttackTrainSet(
            positives=train_pos,
            negatives=train_neg,
            seed=derive_seed(rc.seed, "attack", spec.id, k),
        )
        ckpt = train_attack(ts, attack_cfg)
        sp = predict_manifest(ckpt, scored_pos)
        sn = predict_manifest(ckpt, scored_neg)
        rows = [(i, p, 1) for i, p in sp] + [(i, p, 0) for i, p in sn]
        _write_scores(scores_dir / f"row{spec.id}-seed{k}.jsonl", rows)
        aucs.append(roc_auc([r[1] for r in rows], [r[2] for r in rows]))

    interval = confidence_interval(aucs) if len(aucs) >= 2 else None

    emb_seed = derive_seed(rc.seed, "embedder")
    protos = build_prototypes(
        [read_ppm(r.path) for r in ex_pos], [read_ppm(r.path) for r in ex_neg], emb_seed
    )
    bp = baseline_scores([read_ppm(r.path) for r in scored_pos_recs], protos, emb_seed)
    bn = baseline_scores([read_ppm(r.path) for r in scored_neg_recs], protos, emb_seed)
    baseline_auc = roc_auc(bp + bn, [1] * len(bp) + [0] * len(bn))
    _write_scores(
        scores_dir / f"row{spec.id}-baseline.jsonl",
        [(r.image_id, s, 1) for r, s in zip(scored_pos_recs, bp)]
        + [(r.image_id, s, 0) for r, s in zip(scored_neg_recs, bn)],
    )

    target_name = reg.generated_target(spec.train_pos)
    fid_value = None
    if target_name is not None:
        fid_value = fid(
            extract_features(train_pos.load_images(), emb_seed),
            extract_features(reg.dataset(target_name).load_images(), emb_seed),
        )

    return ExperimentResult(
        spec_id=spec.id,
        name=spec.name,
        train_pos=spec.train_pos,
        train_neg=spec.train_neg,
        test_pos=spec.test_pos,
        test_neg=spec.test_neg,
        per_seed_aucs=aucs,
        auc_mean=interval.mean if interval else aucs[0],
        auc_half_width=interval.half_width if interval else 0.0,
        baseline_auc=baseline_auc,
        fid_to_target=fid_value,
        seconds=time.perf_counter() - t0,
    )


# ---------- matrix ----------


def _run_row_task(spec_dict: dict, rc_payload: dict) -> dict:
    """Process-pool entry: rebuild config, run one row."""
    rc = RunConfig(
        workspace=Path(rc_payload["workspace"]),
        seed=rc_payload["seed"],
        image_size=rc_payload["image_size"],
        workers=1,
        scale_name=rc_payload["scale_name"],
        scale=ScaleConfig(**rc_payload["scale"]),
    )
    spec = ExperimentSpec.from_dict(spec_dict)
    try:
        return {"ok": True, "result": run_experiment(spec, rc).to_dict()}
    except MialabError as exc:
        return {"ok": False, "id": spec.id, "name": spec.name, "error": str(exc)}


def _rc_payload(rc: RunConfig) -> dict:
    return {
        "workspace": str(rc.workspace),
        "seed": rc.seed,
        "image_size": rc.image_size,
        "scale_name": rc.scale_name,
        "scale": asdict(rc.scale),
    }


def run_matrix(
    specs: list[ExperimentSpec] | None, rc: RunConfig
) -> tuple[list[ExperimentResult], list[dict]]:
    """Run all rows, sharing cached artifacts; emit results.csv/.md.

    Returns (results, failures); failures are recorded, not raised.
    """
    pin_torch_runtime()
    if specs is None:
        specs = default_matrix()
    reg = Registry(rc)

    results: list[ExperimentResult] = []
    failures: list[dict] = []
    if rc.workers > 1 and len(specs) > 1:
        # build every artifact serially first so parallel rows only train attacks
        for spec in specs:
            for sel in (spec.train_pos, spec.train_neg, spec.test_pos, spec.test_neg):
                reg.dataset(sel)
        with ProcessPoolExecutor(max_workers=rc.workers) as pool:
            payload = _rc_payload(rc)
            outs = list(pool.map(_run_row_task, [s.to_dict() for s in specs], [payload] * len(specs)))
        for out in outs:
            if out["ok"]:
                r = out["result"]
                results.append(ExperimentResult(**r))
            else:
                failures.append(out)
                log.error("row %s failed: %s", out["id"], out["error"])
    else:
        for spec in specs:
            try:
                results.append(run_experiment(spec, rc, reg))
            except MialabError as exc:
                failures.append({"ok": False, "id": spec.id, "name": spec.name, "error": str(exc)})
                log.error("row %s failed: %s", spec.id, exc)

    write_reports(results, failures, rc)
    return results, failures


CSV_COLUMNS = [
    "id", "train_pos", "train_neg", "test_pos", "test_neg",
    "auc_mean", "auc_ci", "baseline_auc", "fid",
]


def _fmt(x: float | None, digits: int = 6) -> str:
    return "" if x is None else f"{x:.{digits}f}"


def write_reports(
    results: list[ExperimentResult], failures: list[dict], rc: RunConfig
) -> Path:
    reports = Path(rc.workspace) / "reports"
    reports.mkdir(parents=True, exist_ok=True)

    # results.csv holds only run-deterministic fields; wall time goes to
    # timings.csv and the markdown report so reruns stay byte-identical
    with open(reports / "results.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CSV_COLUMNS)
        for r in results:
            w.writerow(
                [
                    r.spec_id, r.train_pos, r.train_neg, r.test_pos, r.test_neg,
                    _fmt(r.auc_mean), _fmt(r.auc_half_width), _fmt(r.baseline_auc),
                    _fmt(r.fid_to_target),
                ]
            )

    with open(reports / "timings.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id", "seconds"])
        for r in results:
            w.writerow([r.spec_id, f"{r.seconds:.1f}"])

    lines = [
        "# Experiment matrix results",
        "",
        "| id | experiment | train pos | train neg | test pos | test neg | AUC | baseline | FID | seconds |",
        "|----|------------|-----------|-----------|----------|----------|-----|----------|-----|---------|",
    ]
    for r in results:
        auc = f"{r.auc_mean:.3f} ± {r.auc_half_width:.3f}"
        fid_s = "-" if r.fid_to_target is None else f"{r.fid_to_target:.3f}"
        lines.append(
            f"| {r.spec_id} | {r.name} | {r.train_pos} | {r.train_neg} | {r.test_pos} "
            f"| {r.test_neg} | {auc} | {r.baseline_auc:.3f} | {fid_s} | {r.seconds:.1f} |"
        )
    for fail in failures:
        lines.append(f"| {fail['id']} | {fail['name']} | - | - | - | - | FAILED: {fail['error']} | - | - | - |")
    (reports / "results.md").write_text("\n".join(lines) + "\n")
    return reports / "results.csv"


# ---------- guidance sweep ----------


@dataclass
class SweepResult:
    scales: list[float]
    auc_means: list[float]
    auc_half_widths: list[float]
    fids: list[float]
    spearman_auc_fid: float | None
    failures: list[dict] = field(default_factory=list)


def guidance_sweep(
    rc: RunConfig, scales: tuple[float, ...] = (0.0, 4.0, 8.0, 12.0, 16.0)
) -> SweepResult:
    """Regenerate training positives per guidance scale and rerun the
    reference row; reports AUC vs FID(generated, fine-tune target)."""
    pin_torch_runtime()
    reg = Registry(rc)
    rows, failures = [], []
    for s in scales:
        sel = f"gen-A-s{s:g}"
        spec = ExperimentSpec(
            id=f"sweep-s{s:g}",
            name=f"guidance sweep s={s:g}",
            train_pos=sel,
            train_neg="gen-B",
            test_pos="seen-A",
            test_neg="unseen-B",
            guidance_scale=s,
        )
        try:
            rows.append((s, run_experiment(spec, rc, reg)))
        except MialabError as exc:
            failures.append({"scale": s, "error": str(exc)})
            log.error("sweep scale %s failed: %s", s, exc)

    result = SweepResult(
        scales=[s for s, _ in rows],
        auc_means=[r.auc_mean for _, r in rows],
        auc_half_widths=[r.auc_half_width for _, r in rows],
        fids=[r.fid_to_target if r.fid_to_target is not None else float("nan") for _, r in rows],
        spearman_auc_fid=None,
        failures=failures,
    )
    clean = [(a, f) for a, f in zip(result.auc_means, result.fids) if not np.isnan(f)]
    if len(clean) >= 2:
        result.spearman_auc_fid = spearman([a for a, _ in clean], [f for _, f in clean])

    reports = Path(rc.workspace) / "reports"
    reports.mkdir(parents=True, exist_ok=True)
    with open(reports / "sweep.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["s", "auc_mean", "auc_ci", "fid"])
        for s, r in rows:
            w.writerow([f"{s:g}", _fmt(r.auc_mean), _fmt(r.auc_half_width), _fmt(r.fid_to_target)])
    (reports / "sweep_summary.json").write_text(
        json.dumps(
            {
                "scales": result.scales,
                "auc_means": result.auc_means,
                "fids": result.fids,
                "spearman_auc_fid": result.spearman_auc_fid,
                "failures": failures,
            },
            sort_keys=True,
        )
        + "\n"
    )
    return result


# ---------- dilution ----------


def dilution_spec(ratio: tuple[int, int]) -> ExperimentSpec:
    """Spec for a mixed fine-tuning target; (1, 0) reduces to the reference row."""
    ra, rb = ratio
    if (ra, rb) == (1, 0):
        return row4_spec()
    return ExperimentSpec(
        id=f"dilution-{ra}-{rb}",
        name=f"diluted target {ra}:{rb}",
        train_pos=f"gen-mix-A-wild-{ra}-{rb}",
        train_neg="gen-B",
        test_pos="seen-A",
        test_neg="unseen-B",
    )


def dilution_experiment(ratio: tuple[int, int], rc: RunConfig) -> ExperimentResult:
    return run_experiment(dilution_spec(ratio), rc)
