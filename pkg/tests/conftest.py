import pytest

from attnprune import AttentionInstance, CalibrationSet, SyntheticSpec, generate
from attnprune.rng import SplitMix64


def make_instance(n, d, seed=0, use_causal_mask=True, scale=0.5):
    """Small random instance with scores kept well inside the smooth regime."""
    rng = SplitMix64(seed)
    x = scale * rng.gaussian(n * d).reshape(n, d)
    w = scale * rng.gaussian(d * d).reshape(d, d)
    return AttentionInstance(x, w, use_causal_mask=use_causal_mask)


def make_calibration(n, d, k, seed=0, use_causal_mask=True, scale=0.5):
    insts = tuple(
        make_instance(n, d, seed=seed * 1000 + j, use_causal_mask=use_causal_mask, scale=scale)
        for j in range(k)
    )
    return CalibrationSet(insts)


@pytest.fixture
def tiny_cal():
    return make_calibration(3, 2, 2, seed=5)


@pytest.fixture
def small_dataset():
    spec = SyntheticSpec(n=6, d=4, k=3, weight_rank=2, seed=11)
    return generate(spec)
