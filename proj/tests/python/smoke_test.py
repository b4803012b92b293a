"""Python-facing smoke checks for the _rssgen extension module.

Run via ctest (PYTHONPATH points at the built module) or manually:
    PYTHONPATH=build/python python3 tests/python/smoke_test.py
"""

import json
import math
import os
import subprocess
import sys
import tempfile

import _rssgen as rg


def approx(a, b, tol=1e-9):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def test_scene_and_channel():
    cfg = rg.SceneConfig()
    cfg.seed = 7
    cfg.n_vehicles = 4
    scene = rg.generate_scene(cfg)
    assert len(scene.receivers) == 64
    assert len(scene.blockers) == 4
    # Determinism.
    assert rg.generate_scene(cfg).to_json() == scene.to_json()

    params = rg.ChannelParams()
    params.pathloss.shadow_sigma_db = 0.0
    rss = rg.compute_rss_map(scene, params)
    for i in range(64):
        recon = rss.r_los_dbm[i] + rss.r_reflection_db[i] - rss.r_blockage_db[i]
        approx(rss.rss_dbm[i], recon)

    pl = rg.PathLossParams()
    pl.fc_ghz = 1.0
    pl.shadow_sigma_db = 0.0
    approx(rg.pathloss_umi_los(1.0, pl, 0), 32.4, 1e-12)


def test_features_and_model():
    cfg = rg.SceneConfig()
    cfg.seed = 3
    cfg.n_vehicles = 3
    scene = rg.generate_scene(cfg)
    fcfg = rg.FeatureConfig()
    fb = rg.extract_features(scene, fcfg)
    flat = fb.flatten()
    assert len(flat) == fcfg.flat_dims()

    mcfg = rg.ModelConfig.for_features(fcfg, 64)
    model = rg.Model.init(mcfg, 5)
    assert model.param_count() > 0

    params = rg.ChannelParams()
    rss = rg.compute_rss_map(scene, params)
    pred = rg.forward(model, flat, rss.r_los_dbm)
    assert len(pred.rss_hat_dbm) == 64
    assert all(h >= 0.0 for h in pred.heads)
    assert len(pred.fused) == mcfg.fused_dim()
    assert rg.encode(model, flat) == list(pred.fused)
    assert rg.flops_estimate(model, 2) == 2 * rg.flops_estimate(model, 1)


def test_stats_and_aggregation():
    a = rg.FeatureStats()
    rg.update_stats(a, [-1.0])
    rg.update_stats(a, [1.0])
    b = rg.FeatureStats()
    rg.update_stats(b, [-1.0])
    rg.update_stats(b, [3.0])
    approx(rg.w2_distance(a, b), math.sqrt(2.0), 1e-12)
    approx(rg.w2_distance(a, a), 0.0)

    gamma = rg.similarity_weights([1.0, 2.0])
    e1, e05 = math.exp(1.0), math.exp(0.5)
    approx(gamma[0], e1 / (e1 + e05), 1e-12)
    approx(sum(gamma), 1.0, 1e-12)

    fcfg = rg.FeatureConfig()
    fcfg.bev_grid = 4
    fcfg.radar_points = 2
    fcfg.gps_max = 2
    mcfg = rg.ModelConfig.for_features(fcfg, 4)
    mcfg.enc_hidden = 4
    mcfg.enc_out = 2
    mcfg.head_hidden = 4
    mcfg.embed_dim = 2
    m1, m2 = rg.Model.init(mcfg, 1), rg.Model.init(mcfg, 2)
    agg = rg.aggregate([m1, m2], [0.25, 0.75])
    p1, p2, pa = m1.params(), m2.params(), agg.params()
    for i in range(0, len(pa), 17):
        approx(pa[i], 0.25 * p1[i] + 0.75 * p2[i], 1e-12)


def test_pac():
    assert rg.required_samples(1024, 0.1, 0.05) == 100
    spec = rg.FiniteClassSpec()
    spec.n_cells = 12
    spec.threshold = 6
    spec.epsilon0 = 0.2
    spec.epsilon1 = 0.1
    spec.delta = 0.05
    spec.trials = 100
    spec.seed = 9
    counts = rg.enumerate_restricted_class(spec)
    assert counts.total == 2**12
    assert 13 <= counts.restricted <= counts.total
    run = rg.monte_carlo_verify(spec)
    assert run.success_rate_worst >= 0.9


def test_cli_roundtrip():
    cli = os.environ.get("RSSGEN_CLI")
    if not cli:
        print("RSSGEN_CLI not set; skipping CLI round-trip")
        return
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    config = os.path.join(os.path.dirname(root), "configs", "smoke.json")
    with tempfile.TemporaryDirectory() as out:
        subprocess.run([cli, "gen", "--config", config, "--out", out], check=True, capture_output=True)
        data = os.path.join(out, "data")
        files = sorted(f for f in os.listdir(data) if f.endswith(".jsonl"))
        assert len(files) == 6, files
        with open(os.path.join(data, files[0])) as fh:
            record = json.loads(fh.readline())
        assert record["schema"] == 1
        assert len(record["rss_dbm"]) == 16
        # Unknown config keys are rejected with a machine-readable error.
        bad = os.path.join(out, "bad.json")
        with open(config) as fh:
            doc = json.load(fh)
        doc["mystery"] = 1
        with open(bad, "w") as fh:
            json.dump(doc, fh)
        proc = subprocess.run([cli, "gen", "--config", bad, "--out", out], capture_output=True, text=True)
        assert proc.returncode != 0
        err = json.loads(proc.stderr.strip().splitlines()[-1])
        assert "mystery" in err["error"]


def main():
    test_scene_and_channel()
    test_features_and_model()
    test_stats_and_aggregation()
    test_pac()
    test_cli_roundtrip()
    print("python smoke: all checks passed")


if __name__ == "__main__":
    sys.exit(main())
