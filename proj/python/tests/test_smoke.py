import math

import numpy as np
import pytest

import pifo


def test_specs():
    dims = {e: (pifo.spec(e).proprio_dim, pifo.spec(e).action_dim, pifo.spec(e).max_steps) for e in pifo.ENVS}
    assert dims == {"cartpole-balance": (4, 1, 200), "mountain-car": (2, 1, 300), "point-mass": (4, 2, 150)}
    with pytest.raises(pifo.ConfigError):
        pifo.spec("acrobot")


def test_reset_step_render():
    s = pifo.reset("cartpole-balance", 3)
    assert s == pifo.reset("cartpole-balance", 3)
    r = pifo.step("cartpole-balance", s, [0.5])
    assert r.reward == 1.0
    assert r.next.step_index == 1
    frame = pifo.render("cartpole-balance", s)
    assert frame.shape == (64, 64) and frame.dtype == np.uint8
    assert set(np.unique(frame)) <= {0, 1}
    assert frame.sum() > 0


def test_config_round_trip_and_errors():
    cfg = pifo.TrainConfig.parse("iterations=7\nmode=vision\n")
    assert cfg.iterations == 7 and cfg.mode == "vision"
    assert pifo.TrainConfig.parse(cfg.serialize()) == cfg
    with pytest.raises(pifo.ConfigError):
        pifo.TrainConfig.parse("bogus=1")


def test_gae_and_score():
    adv, ret = pifo.compute_gae([1.0, 2.0, 3.0, 4.0], [0.0] * 4, [0, 0, 0, 1], 99.0, 1.0, 1.0)
    assert adv == [10.0, 9.0, 7.0, 4.0] and ret == adv
    assert pifo.normalized_score(60.0, 10.0, 110.0) == 0.5
    with pytest.raises(pifo.EvaluationError):
        pifo.normalized_score(1.0, 5.0, 5.0)


def test_demo_round_trip():
    traj = np.zeros((3, 64, 64), dtype=np.uint8)
    traj[1, 10, 20] = 1
    demos = pifo.DemoSet("point-mass", [traj])
    blob = demos.encode()
    assert len(blob) == 4 + 4 + 2 + len("point-mass") + 4 + 4 + 3 * 4096
    back = pifo.DemoSet.decode(blob)
    assert back.env_id == "point-mass"
    np.testing.assert_array_equal(back.trajectories[0], traj)
    with pytest.raises(pifo.FormatError):
        pifo.DemoSet.decode(blob[:-1])


def test_tiny_pipeline(tmp_path):
    cfg = pifo.TrainConfig()
    cfg.env = "cartpole-balance"
    cfg.iterations = 1
    cfg.rollout_steps = 64
    cfg.minibatch = 32
    cfg.ppo_epochs = 1
    cfg.disc_epochs = 1
    cfg.disc_minibatch = 32
    cfg.eval_every = 1
    cfg.eval_episodes = 2
    cfg.seed = 99
    expert = pifo.train_expert(cfg, tmp_path / "expert")
    assert len(expert.rows) == 1 and expert.best_checkpoint.exists()

    demos = pifo.record_demos(expert.best_checkpoint, "cartpole-balance", 2)
    assert demos.env_id == "cartpole-balance" and len(demos.trajectories) == 2

    cfg.seed = 7
    cfg.expert_checkpoint = str(expert.best_checkpoint)
    run = pifo.imitate(demos, cfg, tmp_path / "imitate")
    assert len(run.rows) == 1
    assert math.isfinite(run.rows[0].normalized_score)

    report = pifo.evaluate(expert.best_checkpoint, "cartpole-balance", 2, expert.best_checkpoint)
    assert report.mean_return == report.expert_return


def test_cli_entry():
    code, out, err = pifo.main(["--help"])
    assert code == 0 and "imitate" in out
    code, out, err = pifo.main(["train-expert", "--out", "x"])
    assert code == 2 and "--env" in err
