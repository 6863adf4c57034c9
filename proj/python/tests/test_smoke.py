import math

import numpy as np
import pytest

import rdt


def test_tree_shapes():
    t = rdt.build_complete_tree(2, 3)
    assert (t.node_count, t.leaf_count, t.depth) == (15, 8, 3)
    assert t.children(0) == [1, 2]
    assert t.parent(0) is None
    with pytest.raises(ValueError):
        rdt.build_complete_tree(1, 3)


def test_softmax_example():
    model = rdt.init_model(rdt.build_complete_tree(2, 1), 1, 2)
    model.set_theta(0, [0.0, 1.0, 0.0, -1.0])
    probs = rdt.child_distribution(model, 0, np.array([0.3]))
    assert probs[0] == pytest.approx(math.exp(2) / (math.exp(2) + 1), abs=1e-15)


def test_paths_sum_to_one_and_predict_depth():
    model = rdt.init_model(rdt.build_complete_tree(3, 2), 2, 4, init_scale=2.0, seed=3)
    x = np.array([0.2, -0.4])
    assert sum(p for _, p in rdt.enumerate_paths(model, x)) == pytest.approx(1.0, abs=1e-12)
    out = rdt.predict(model, x)
    assert out["policy_evaluations"] == 2
    assert len(out["trajectory"]) == 3


def test_train_separable_and_save(tmp_path):
    rng = np.random.default_rng(0)
    x = np.vstack([rng.normal([-0.6, 0], 0.1, (100, 2)), rng.normal([0.6, 0], 0.1, (100, 2))])
    y = [0] * 100 + [1] * 100
    data = rdt.Dataset(x, y, 2)
    model = rdt.init_model(rdt.build_complete_tree(2, 1), 2, 2, seed=1)
    cfg = rdt.TrainConfig()
    cfg.epochs = 30
    log = rdt.train(model, data, cfg)
    assert len(log.train_loss) == 30
    assert rdt.accuracy(model, data) >= 0.95

    path = tmp_path / "m.model"
    model.save(path)
    assert rdt.load_model(path) == model


def test_gradients_agree():
    train, _ = rdt.generate_gaussian_dataset(classes=3, per_class=10, seed=2)
    model = rdt.init_model(rdt.build_complete_tree(2, 1), 2, 3, init_scale=1.0, seed=4)
    exact = rdt.exact_gradient(model, train)
    sampled = rdt.sampled_gradient(model, train, trajectories=5000, seed=1)
    a = np.concatenate([np.ravel(b) for b in exact["theta"] + exact["alpha"] if len(b)])
    b = np.concatenate([np.ravel(b) for b in sampled["theta"] + sampled["alpha"] if len(b)])
    assert np.dot(a, b) / np.linalg.norm(a) / np.linalg.norm(b) > 0.99


def test_random_tree_and_frontier():
    model = rdt.make_random_tree(rdt.build_complete_tree(2, 2), 2, 4, seed=5)
    assert model.alpha_frozen
    for leaf in model.topology.leaves():
        assert sum(model.alpha(leaf)) == pytest.approx(-2.0)
    grid = rdt.frontier_grid(model, resolution=7)
    assert grid.shape == (7, 7)


def test_experiment_report():
    cfg = """{"dataset": {"classes": 4, "per_class": 10, "seed": 1}, "shapes": [[2, 2]], "runs": 1,
              "train": {"learning_rates": [0.1], "epochs": [2]}}"""
    out = rdt.run_experiment(cfg)
    assert out["report"].startswith("rdt-report 1\n")
    assert rdt.check_report_consistency(out["report"]) == ""
    assert {r["method"] for r in out["rows"]} == {"RDT", "RandomTree"}
    with pytest.raises(rdt.MalformedFileError):
        rdt.run_experiment('{"shapes": [[2, 2]], "nope": 1}')
