"""Experiment runner tests at smoke scale.

These exercise the registry/caching layer and the end-to-end row flow with
tiny corpora and shallow training so the full suite stays fast; the desk-
scale statistical properties live in test_acceptance.py.
"""

import json
import logging
from pathlib import Path

import pytest

from mialab.errors import ConfigError, IntegrityError
from mialab.experiments.config import RunConfig
from mialab.experiments.registry import Registry
from mialab.experiments.runner import (
    dilution_spec,
    guidance_sweep,
    run_experiment,
    run_matrix,
)
from mialab.experiments.specs import ExperimentSpec, default_matrix, load_specs_dir, row4_spec

REPO_ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture(scope="module")
def smoke_rc(tmp_path_factory):
    ws = tmp_path_factory.mktemp("smoke-ws")
    return RunConfig.create(workspace=ws, seed=3, scale="smoke")


@pytest.fixture(scope="module")
def smoke_registry(smoke_rc):
    return Registry(smoke_rc)


class TestSpecs:
    def test_matrix_has_13_rows(self):
        specs = default_matrix()
        assert [s.id for s in specs] == [str(i) for i in range(1, 14)]

    def test_repo_json_matches_builtin(self):
        loaded = load_specs_dir(REPO_ROOT / "experiments")
        assert loaded == default_matrix()

    def test_row5_prompt_override(self):
        row5 = next(s for s in default_matrix() if s.id == "5")
        assert row5.prompt_override == "a profile picture"
        assert row5.train_pos == "gen-A-profile"

    def test_from_dict_requires_fields(self):
        with pytest.raises(ConfigError):
            ExperimentSpec.from_dict({"id": "x"})

    def test_dilution_identity_ratio_reduces_to_reference_row(self):
        assert dilution_spec((1, 0)) == row4_spec()
        d11 = dilution_spec((1, 1))
        assert d11.train_pos == "gen-mix-A-wild-1-1"
        assert (d11.test_pos, d11.test_neg) == (row4_spec().test_pos, row4_spec().test_neg)


class TestRegistry:
    def test_unknown_selector_rejected(self, smoke_registry):
        with pytest.raises(ConfigError):
            smoke_registry.dataset("gen-Q")
        with pytest.raises(ConfigError):
            smoke_registry.checkpoint("ft-Q")

    def test_corpus_built_and_cached(self, smoke_registry, caplog):
        m1 = smoke_registry.dataset("corpus-A")
        assert len(m1) == smoke_registry.rc.scale.corpus_size
        with caplog.at_level(logging.INFO, logger="mialab.experiments.registry"):
            m2 = smoke_registry.dataset("corpus-A")
        assert "cache hit" in caplog.text
        assert m1.ids() == m2.ids()

    def test_partitions_disjoint_and_exhaustive(self, smoke_registry):
        seen = smoke_registry.dataset("seen-A")
        unseen = smoke_registry.dataset("unseen-A")
        corpus = smoke_registry.dataset("corpus-A")
        assert seen.ids() | unseen.ids() == corpus.ids()
        assert seen.ids().isdisjoint(unseen.ids())

    def test_watermarked_set_tagged(self, smoke_registry):
        wm = smoke_registry.dataset("seen-A-wm")
        assert all(r.watermark == "visible" for r in wm)
        assert len(wm) == len(smoke_registry.dataset("seen-A"))

    def test_mix_recaptioned_to_target_prefix(self, smoke_registry):
        mixed = smoke_registry.dataset("mix-A-wild-1-1")
        assert all(r.caption.startswith("a instA headshot of a") for r in mixed)
        sources = {r.source for r in mixed}
        assert sources == {"A", "WILD"}

    def test_generated_target_mapping(self, smoke_registry):
        assert smoke_registry.generated_target("gen-A") == "seen-A"
        assert smoke_registry.generated_target("gen-NFT-A") is None
        assert smoke_registry.generated_target("seen-A") is None
        assert smoke_registry.generated_target("gen-A-s4") == "seen-A"


class TestRunExperiment:
    def test_row8_smoke(self, smoke_rc, smoke_registry):
        spec = next(s for s in default_matrix() if s.id == "8")
        result = run_experiment(spec, smoke_rc, smoke_registry)
        assert len(result.per_seed_aucs) == len(smoke_rc.scale.seeds)
        assert 0.0 <= result.auc_mean <= 1.0
        assert 0.0 <= result.baseline_auc <= 1.0
        assert result.fid_to_target is not None
        scores = smoke_rc.workspace / "scores" / "row8-seed0.jsonl"
        assert scores.exists()
        first = json.loads(scores.read_text().splitlines()[0])
        assert set(first) == {"image_id", "p", "label"}

    def test_rerun_is_identical(self, smoke_rc, smoke_registry):
        spec = next(s for s in default_matrix() if s.id == "8")
        r1 = run_experiment(spec, smoke_rc, smoke_registry)
        r2 = run_experiment(spec, smoke_rc, smoke_registry)
        assert r1.per_seed_aucs == r2.per_seed_aucs
        assert r1.baseline_auc == r2.baseline_auc
        assert r1.fid_to_target == r2.fid_to_target

    def test_overlapping_test_sets_rejected(self, smoke_rc, smoke_registry):
        spec = ExperimentSpec(
            id="bad", name="overlap", train_pos="gen-A", train_neg="gen-B",
            test_pos="seen-A", test_neg="seen-A",
        )
        with pytest.raises(IntegrityError):
            run_experiment(spec, smoke_rc, smoke_registry)

    def test_unresolvable_selector_fails_fast(self, smoke_rc, smoke_registry):
        spec = ExperimentSpec(
            id="bad2", name="nope", train_pos="gen-nowhere", train_neg="gen-B",
            test_pos="seen-A", test_neg="unseen-B",
        )
        with pytest.raises(ConfigError):
            run_experiment(spec, smoke_rc, smoke_registry)


class TestMatrix:
    def test_two_row_matrix_reports(self, smoke_rc):
        specs = [s for s in default_matrix() if s.id in ("4", "8")]
        results, failures = run_matrix(specs, smoke_rc)
        assert len(results) == 2 and not failures
        reports = smoke_rc.workspace / "reports"
        csv_text = (reports / "results.csv").read_text()
        assert csv_text.splitlines()[0] == (
            "id,train_pos,train_neg,test_pos,test_neg,auc_mean,auc_ci,baseline_auc,fid"
        )
        assert len(csv_text.splitlines()) == 3
        assert (reports / "results.md").exists()
        assert (reports / "timings.csv").exists()

    def test_matrix_rows_match_isolated_runs(self, smoke_rc, smoke_registry):
        spec = next(s for s in default_matrix() if s.id == "4")
        isolated = run_experiment(spec, smoke_rc, smoke_registry)
        results, _ = run_matrix([spec], smoke_rc)
        assert results[0].per_seed_aucs == isolated.per_seed_aucs
        assert results[0].baseline_auc == isolated.baseline_auc

    def test_failures_recorded_not_raised(self, smoke_rc):
        bad = ExperimentSpec(
            id="99", name="broken", train_pos="gen-missing", train_neg="gen-B",
            test_pos="seen-A", test_neg="unseen-B",
        )
        good = next(s for s in default_matrix() if s.id == "8")
        results, failures = run_matrix([bad, good], smoke_rc)
        assert len(results) == 1 and len(failures) == 1
        assert failures[0]["id"] == "99"
        md = (smoke_rc.workspace / "reports" / "results.md").read_text()
        assert "FAILED" in md

    def test_empty_matrix(self, smoke_rc):
        results, failures = run_matrix([], smoke_rc)
        assert results == [] and failures == []
        assert (smoke_rc.workspace / "reports" / "results.csv").read_text().strip() == (
            "id,train_pos,train_neg,test_pos,test_neg,auc_mean,auc_ci,baseline_auc,fid"
        )


class TestSweep:
    def test_single_scale_reports_null_correlation(self, smoke_rc):
        result = guidance_sweep(smoke_rc, scales=(4.0,))
        assert result.scales == [4.0]
        assert result.spearman_auc_fid is None
        summary = json.loads(
            (smoke_rc.workspace / "reports" / "sweep_summary.json").read_text()
        )
        assert summary["spearman_auc_fid"] is None
        assert (smoke_rc.workspace / "reports" / "sweep.csv").exists()


def test_seed_sensitivity(smoke_rc, smoke_registry):
    """Per-seed AUCs differ across seeds on a non-degenerate task."""
    spec = next(s for s in default_matrix() if s.id == "4")
    result = run_experiment(spec, smoke_rc, smoke_registry)
    assert len(set(result.per_seed_aucs)) > 1
