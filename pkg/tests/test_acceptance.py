"""Behavioral acceptance checklist for the whole package.

Each test covers one acceptance criterion end to end and prints a
single ``acceptance <name>: PASS`` line (visible with ``pytest -s``);
a failing criterion prints ``FAIL`` and raises, so the suite stays an
honest gate.  Tolerances are part of the contract and are asserted
explicitly.
"""
from __future__ import annotations

import json
import math
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

import oracles
from conftest import random_dist, write_eval_fixture
from test_cli import run_cli
from test_optical_flow import sinusoid_pair
from vidfuse import (
    FlowParams,
    Frame,
    FusionPlan,
    PredictionBundle,
    ProbDist,
    bhattacharyya_distance,
    biased_conflate,
    compute_d_low,
    compute_dense_flow,
    conflate,
    evaluate_accuracy,
    multi_tier_fuse,
    predict_class,
    redundancy_threshold,
    select_keyframes,
)
from vidfuse.keyframe_select import FrameGraph

README = Path(__file__).resolve().parent.parent / "README.md"


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"acceptance {name}: FAIL")
        raise
    print(f"acceptance {name}: PASS")


@pytest.fixture(scope="module")
def pipeline_chain(tmp_path_factory: pytest.TempPathFactory,
                   synthetic_video_dir: Path) -> dict:
    """One keyframes -> flowfeat -> fuse -> eval run, shared by criteria."""
    out = tmp_path_factory.mktemp("acceptance_chain")
    sel_path = out / "sel.json"
    feat_dir = out / "features"
    fused_path = out / "fused.jsonl"
    report_path = out / "report.json"
    procs = [run_cli("keyframes", str(synthetic_video_dir),
                     "--out", str(sel_path), "--video-id", "synth")]
    procs.append(run_cli("flowfeat", str(synthetic_video_dir),
                         "--keyframes", str(sel_path), "--out-dir", str(feat_dir)))
    preds_path, labels_path = write_eval_fixture(out)
    procs.append(run_cli("fuse", "--preds", str(preds_path),
                         "--out", str(fused_path)))
    procs.append(run_cli("eval", "--fused", str(fused_path),
                         "--labels", str(labels_path), "--report", str(report_path)))
    return {"procs": procs, "sel_path": sel_path, "feat_dir": feat_dir,
            "fused_path": fused_path, "report_path": report_path}


def test_conflation_unit() -> None:
    with criterion("conflation-unit"):
        start = time.perf_counter()
        got = conflate(ProbDist([0.8, 0.2]), ProbDist([0.6, 0.4]))
        assert np.allclose(got.probs, [6.0 / 7.0, 1.0 / 7.0], atol=1e-9)

        rng = np.random.default_rng(101)
        for _ in range(1000):
            num_labels = int(rng.integers(2, 9))
            p = ProbDist(random_dist(rng, num_labels))
            fused = conflate(ProbDist.uniform(num_labels), p)
            assert np.allclose(fused.probs, p.probs, atol=1e-9)
        assert time.perf_counter() - start < 1.0


def test_distribution_distance() -> None:
    with criterion("distribution-distance"):
        d = bhattacharyya_distance(ProbDist([0.5, 0.5]), ProbDist([0.9, 0.1]))
        assert d == pytest.approx(0.11157, abs=1e-4)

        rng = np.random.default_rng(102)
        for _ in range(1000):
            num_labels = int(rng.integers(2, 9))
            p = ProbDist(random_dist(rng, num_labels))
            q = ProbDist(random_dist(rng, num_labels))
            assert bhattacharyya_distance(p, p) <= 1e-12
            assert abs(bhattacharyya_distance(p, q)
                       - bhattacharyya_distance(q, p)) <= 1e-12


def test_biased_conflation() -> None:
    with criterion("biased-conflation"):
        # mixing weight stays a proper convex coefficient
        rng = np.random.default_rng(103)
        for _ in range(10_000):
            num_labels = int(rng.integers(2, 7))
            p1 = ProbDist(random_dist(rng, num_labels))
            p2 = ProbDist(random_dist(rng, num_labels))
            pc = conflate(p1, p2)
            d1 = bhattacharyya_distance(pc, p1)
            d2 = bhattacharyya_distance(pc, p2)
            total = d1 + d2
            beta = 0.0 if total <= 0.0 or abs(d1 - d2) <= 1e-12 \
                else (max(d1, d2) - min(d1, d2)) / total
            assert 0.0 <= beta <= 1.0

        # equal distances reduce to plain conflation: mirrored two-label
        # pairs land equidistant from their (uniform) conflation
        for _ in range(1000):
            p = float(rng.uniform(0.01, 0.99))
            p1 = ProbDist([p, 1.0 - p])
            p2 = ProbDist([1.0 - p, p])
            got = biased_conflate(p1, p2)
            assert np.allclose(got.probs, conflate(p1, p2).probs, atol=1e-9)

        got = biased_conflate(ProbDist([0.9, 0.1]), ProbDist([0.5, 0.5]))
        assert np.allclose(got.probs, [0.9, 0.1], atol=1e-9)


def test_disparity_threshold() -> None:
    with criterion("disparity-threshold"):
        series = redundancy_threshold([1.0, 2.0, 3.0, 4.0])
        assert series.threshold == pytest.approx(2.5 - math.sqrt(5.0 / 3.0),
                                                 abs=1e-12)

        rng = np.random.default_rng(104)
        for _ in range(1000):
            values = rng.uniform(0.0, 4.0, int(rng.integers(2, 30))).tolist()
            mean, std = oracles.mean_and_sample_std(values)
            got = redundancy_threshold(values)
            assert got.threshold == pytest.approx(mean - std, abs=1e-9)


def test_spacing_floor() -> None:
    with criterion("spacing-floor"):
        assert compute_d_low(2195, 6) == 199
        # the off-by-one against the commonly quoted 200 is called out in
        # the project docs
        readme = README.read_text()
        assert "199" in readme and "200" in readme


def test_greedy_selection() -> None:
    with criterion("greedy-selection"):
        rng = np.random.default_rng(105)
        for _ in range(1000):
            n = int(rng.integers(4, 9))
            total = int(rng.integers(40, 500))
            timestamps = sorted(
                rng.choice(np.arange(1, total + 1), n, replace=False).tolist())
            raw = rng.uniform(0.0, 4.0, (n, n))
            weights = (raw + raw.T) / 2.0
            np.fill_diagonal(weights, 0.0)
            n_kf = int(rng.integers(2, 7))

            graph = FrameGraph(timestamps=tuple(timestamps), weights=weights)
            result = select_keyframes(graph, n_kf, total_frames=total)

            d_low = compute_d_low(total, n_kf)
            ref_edges, ref_nodes = oracles.greedy_selection(
                timestamps, weights.tolist(), n_kf, d_low)
            assert result.chosen_edges == tuple(
                (timestamps[i], timestamps[j]) for i, j in ref_edges)
            organic = sorted(k for k in result.chosen_frames
                             if k not in result.padded_frames)
            assert organic == sorted(timestamps[i] for i in ref_nodes)
            for a, b in zip(organic, organic[1:]):
                assert b - a > d_low


def test_flow_shift() -> None:
    with criterion("flow-shift"):
        start = time.perf_counter()
        rng = np.random.default_rng(106)
        pixels = rng.uniform(0.0, 255.0, (32, 32))
        zero = compute_dense_flow(Frame(pixels, 1), Frame(pixels.copy(), 2))
        assert np.abs(zero.u).max() == 0.0
        assert np.abs(zero.v).max() == 0.0

        prev, nxt = sinusoid_pair(64)
        flow = compute_dense_flow(
            prev, nxt, FlowParams(alpha=1.0, iterations=200, epsilon=0.0))
        interior_u = flow.u[4:-4, 4:-4]
        interior_v = flow.v[4:-4, 4:-4]
        assert 0.5 <= float(interior_u.mean()) <= 1.5
        assert float(np.abs(interior_v).mean()) < 0.2
        assert time.perf_counter() - start < 5.0


def test_active_half_selection(pipeline_chain: dict) -> None:
    with criterion("active-half-selection"):
        assert pipeline_chain["procs"][0].returncode == 0, \
            pipeline_chain["procs"][0].stderr
        sel = json.loads(pipeline_chain["sel_path"].read_text())
        assert sel["n_kf"] == 6
        chosen = [entry["frame_index"] for entry in sel["chosen"]]
        static_half = sum(1 for k in chosen if k <= 200)
        active_half = sum(1 for k in chosen if k > 200)
        assert active_half > static_half, (static_half, active_half)


def test_stream_rescue() -> None:
    with criterion("stream-rescue"):
        spatial = ProbDist([0.4, 0.25, 0.35])
        temporal = ProbDist([0.25, 0.4, 0.35])
        assert predict_class(spatial) == 0
        assert predict_class(temporal) == 1
        assert predict_class(conflate(spatial, temporal)) == 2

        bundle = PredictionBundle(
            video_id="rescue", modalities=("spatial", "temporal"),
            video_preds={"spatial": spatial, "temporal": temporal})
        assert predict_class(multi_tier_fuse(bundle)) == 2


def _random_bundle(rng: np.random.Generator, num_labels: int) -> PredictionBundle:
    mods = tuple(f"m{i}" for i in range(int(rng.integers(1, 4))))
    frame_count = int(rng.integers(0, 4))
    frames = sorted(rng.choice(np.arange(1, 50), frame_count,
                               replace=False).tolist())
    frame_preds = {}
    video_preds = {}
    for m in mods:
        if frames and rng.random() < 0.8:
            frame_preds[m] = tuple(
                (int(k), ProbDist(random_dist(rng, num_labels))) for k in frames)
        if rng.random() < 0.7:
            video_preds[m] = ProbDist(random_dist(rng, num_labels))
    if not frame_preds and not video_preds:
        video_preds[mods[0]] = ProbDist(random_dist(rng, num_labels))
    return PredictionBundle(video_id="rand", modalities=mods,
                            frame_preds=frame_preds, video_preds=video_preds)


def _permute_bundle(bundle: PredictionBundle, perm: np.ndarray) -> PredictionBundle:
    return PredictionBundle(
        video_id=bundle.video_id,
        modalities=bundle.modalities,
        frame_preds={m: tuple((k, ProbDist(d.probs[perm])) for k, d in preds)
                     for m, preds in bundle.frame_preds.items()},
        video_preds={m: ProbDist(d.probs[perm])
                     for m, d in bundle.video_preds.items()})


def test_fusion_engine(tmp_path: Path) -> None:
    with criterion("fusion-engine"):
        # two modalities x two key frames x two labels, plus video level
        frame_preds = {
            "spatial": ((3, ProbDist([0.7, 0.3])), (9, ProbDist([0.55, 0.45]))),
            "temporal": ((3, ProbDist([0.4, 0.6])), (9, ProbDist([0.35, 0.65]))),
        }
        video_preds = {"spatial": ProbDist([0.6, 0.4]),
                       "temporal": ProbDist([0.45, 0.55])}
        bundle = PredictionBundle(video_id="vfix",
                                  modalities=("spatial", "temporal"),
                                  frame_preds=frame_preds,
                                  video_preds=video_preds)
        got = multi_tier_fuse(bundle, FusionPlan(("spatial", "temporal")))
        ref = oracles.multi_tier(
            {"spatial": [[0.7, 0.3], [0.55, 0.45]],
             "temporal": [[0.4, 0.6], [0.35, 0.65]]},
            {"spatial": [0.6, 0.4], "temporal": [0.45, 0.55]},
            ["spatial", "temporal"])
        assert np.allclose(got.probs, ref, atol=1e-9)

        # relabeling the classes everywhere relabels the output the same way
        rng = np.random.default_rng(107)
        for _ in range(100):
            num_labels = int(rng.integers(2, 6))
            bundle = _random_bundle(rng, num_labels)
            perm = rng.permutation(num_labels)
            base = multi_tier_fuse(bundle)
            permuted = multi_tier_fuse(_permute_bundle(bundle, perm))
            assert np.allclose(permuted.probs, base.probs[perm], atol=1e-9)

        # parallel fusion is bit-for-bit the serial output
        preds_path = tmp_path / "preds.jsonl"
        with open(preds_path, "w") as fh:
            for v in range(10):
                for m in ("spatial", "temporal"):
                    for k in (2, 5, 8):
                        dist = random_dist(rng, 4).tolist()
                        fh.write(json.dumps(
                            {"video_id": f"v{v:02d}", "modality": m,
                             "level": "frame", "frame_index": k,
                             "dist": dist}) + "\n")
                    fh.write(json.dumps(
                        {"video_id": f"v{v:02d}", "modality": m,
                         "level": "video",
                         "dist": random_dist(rng, 4).tolist()}) + "\n")
        serial = tmp_path / "serial.jsonl"
        parallel = tmp_path / "parallel.jsonl"
        assert run_cli("fuse", "--preds", str(preds_path), "--out", str(serial),
                       "--jobs", "1").returncode == 0
        assert run_cli("fuse", "--preds", str(preds_path), "--out", str(parallel),
                       "--jobs", "4").returncode == 0
        assert serial.read_bytes() == parallel.read_bytes()


def test_cli_smoke(pipeline_chain: dict) -> None:
    with criterion("cli-smoke"):
        for proc in pipeline_chain["procs"]:
            assert proc.returncode == 0, proc.stderr
        assert any(pipeline_chain["feat_dir"].iterdir())

        report = json.loads(pipeline_chain["report_path"].read_text())
        assert set(report) == {"overall_acc", "macro_acc", "per_class"}
        for entry in report["per_class"]:
            assert set(entry) == {"class", "support", "correct"}
        assert report["overall_acc"] == pytest.approx(200.0 / 3.0, abs=1e-9)
        assert report["macro_acc"] == pytest.approx(62.5, abs=1e-9)

        # the same hand-counted fixture, scored directly
        pairs = [(0, 0), (0, 0), (0, 0), (1, 0), (1, 1), (0, 1)]
        scored = evaluate_accuracy(pairs)
        assert scored.overall_acc == pytest.approx(200.0 / 3.0, abs=1e-9)
        assert scored.macro_acc == pytest.approx(62.5, abs=1e-9)
