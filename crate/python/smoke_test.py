"""Smoke test for the Python bindings.

Build and install first:
    pip install maturin
    maturin develop --release -m crates/python/Cargo.toml
then run `python python/smoke_test.py` from the repository root.
"""

import math
import os
import tempfile

import propinfer

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SMOKE = os.path.join(ROOT, "configs", "smoke.conf")


def check_stats():
    assert abs(propinfer.pearson([1, 2, 3, 4], [1, 3, 2, 4]) - 0.8) < 1e-9
    a = [0] * 30 + [1] * 30
    b = [0] * 20 + [1] * 10 + [0] * 10 + [1] * 20
    assert abs(propinfer.cramers_v(a, b) - 1 / 3) < 1e-9
    f, p = propinfer.anova([[0, 2], [2, 4]])
    assert abs(f - 2.0) < 1e-9
    assert abs(p - (1 - math.sqrt(0.5))) < 1e-9


def check_data():
    cols = propinfer.synthetic("X!A,Y~A", n_records=500, seed=3)
    assert "A" in cols and "y" in cols
    assert all(len(v) == 500 for v in cols.values())
    assert propinfer.classify_synthetic("X~A,Y!A", n_records=5000, seed=2) == "X~A,Y!A"


def check_experiment():
    cfg = propinfer.Config.from_file(SMOKE)
    first = propinfer.run_experiment(cfg)
    again = propinfer.run_experiment(cfg)
    assert first.to_json() == again.to_json()
    assert first.correct + first.incorrect + first.failed == 20
    sweep = propinfer.run_sweep(cfg, "queries", ["20", "200"])
    assert [r.queries for r in sweep] == [20, 200]
    try:
        propinfer.Config("family = nope")
    except ValueError:
        pass
    else:
        raise AssertionError("bad config accepted")
    return cfg


def check_models(cfg):
    model = propinfer.train_target(cfg, 0.67)
    local = propinfer.attack_model(cfg, model)
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "model.json")
        model.save(path)
        loaded = propinfer.Model.load(path)
    assert loaded.flatten_params() == model.flatten_params()
    with propinfer.serve(loaded) as server:
        remote = propinfer.attack_remote(cfg, server.address)
    assert remote[0] == local[0]
    assert abs(remote[1] - local[1]) < 1e-9
    return local


if __name__ == "__main__":
    check_stats()
    check_data()
    cfg = check_experiment()
    verdict = check_models(cfg)
    print("python smoke test passed; remote attack predicted %s (confidence %.3f)" % verdict)
