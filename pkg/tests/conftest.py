"""Session fixtures shared across test modules.

The expensive piece is ``trained_speed_model``: a small conditional model
trained on synthetic two-regime data until the speed input actually steers
the decoder. It is built once per session and only when a test asks for it,
so the fast unit modules stay fast.
"""

import time

import pytest

from csg.data import generate_synthetic
from csg.model import CsgConfig
from csg.training import TrainConfig, train

# Two walking-speed populations with enough per-frame speed jitter that the
# next step length is not predictable from history alone; that is what forces
# the decoder to consume its conditioning input instead of shortcutting
# through the latent.
SPEED_REGIMES = {
    "slow": {"speed": 0.3, "jitter_sd": 0.12, "n_agents": 2},
    "fast": {"speed": 1.2, "jitter_sd": 0.12, "n_agents": 2},
}

TRAINED_MODEL_CFG = dict(
    embedding_dim=16,
    encoder_hidden=32,
    decoder_hidden=32,
    forecaster_hidden=32,
    noise_dim=4,
    aggregation="concat",
    aggregation_dim=16,
    neighbor_count=1,
    social_dim=8,
    mlp_hidden=32,
    disc_embedding_dim=16,
    disc_hidden=32,
    disc_mlp_hidden=16,
    obs_len=8,
    pred_len=12,
    precision="float32",
)

TRAINED_TRAIN_CFG = dict(
    epochs=100,
    batch_size=16,
    seed=5,
    val_fraction=0.1,
    lambda_l2=3.0,
)


@pytest.fixture(scope="session")
def trained_speed_model(tmp_path_factory):
    out_dir = tmp_path_factory.mktemp("trained-speed-model")
    scenes = generate_synthetic(SPEED_REGIMES, 250, obs_len=8, pred_len=12, seed=11)
    model_cfg = CsgConfig(**TRAINED_MODEL_CFG)
    train_cfg = TrainConfig(**TRAINED_TRAIN_CFG)
    started = time.perf_counter()
    result = train(scenes, model_cfg, train_cfg, out_dir=str(out_dir))
    train_seconds = time.perf_counter() - started
    test_scenes = generate_synthetic(SPEED_REGIMES, 25, obs_len=8, pred_len=12, seed=101)
    return {
        "result": result,
        "generator": result.generator,
        "discriminator": result.discriminator,
        "scaler": result.scaler,
        "model_cfg": model_cfg,
        "train_cfg": train_cfg,
        "train_scenes": scenes,
        "test_scenes": test_scenes,
        "train_seconds": train_seconds,
        "out_dir": str(out_dir),
    }
