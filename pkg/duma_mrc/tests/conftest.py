"""
Pytest configuration and shared fixtures for the DUMA MRC tests.

This module provides:
- Paths to the bundled DREAM / RACE fixtures
- Micro model configurations small enough for finite-difference checks
- Synthetic example and encoded-question factories
- Custom marker registration
"""

from pathlib import Path

import numpy as np
import pytest

from duma_mrc.model.mc_model import McModel
from duma_mrc.schemas import ModelConfig, SyntheticSpec, TaskKind, TaskSpec, TrainConfig
from duma_mrc.services.encoding import encode_dataset
from duma_mrc.services.synthetic import make_synthetic_examples
from duma_mrc.services.vocab import build_vocab
from duma_mrc.tests.factories import make_micro_config

FIXTURES_DIR = Path(__file__).parent / "fixtures"


# ============================================================================
# Fixture paths
# ============================================================================

@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES_DIR


@pytest.fixture
def dream_fixture() -> Path:
    return FIXTURES_DIR / "dream_sample.json"


@pytest.fixture
def race_fixture() -> Path:
    return FIXTURES_DIR / "race"


@pytest.fixture(autouse=True)
def isolated_log_dir(tmp_path, monkeypatch):
    """Keep the CLI's rotating log file out of the working directory."""
    from duma_mrc import config

    monkeypatch.setattr(config, "LOG_DIR", str(tmp_path / "logs"))


# ============================================================================
# Model configurations
# ============================================================================

@pytest.fixture
def micro_config() -> ModelConfig:
    return make_micro_config()


@pytest.fixture
def micro_model(micro_config) -> McModel:
    return McModel(micro_config)


# ============================================================================
# Data factories
# ============================================================================

@pytest.fixture
def synthetic_questions(micro_config):
    examples = make_synthetic_examples(6, num_options=3, seed=3, context_len=5)
    vocab = build_vocab(examples, micro_config.vocab_size)
    return encode_dataset(examples, vocab, micro_config.max_len, "syn")


@pytest.fixture
def fast_train_config(tmp_path) -> TrainConfig:
    return TrainConfig(
        batch_size=4,
        peak_lr=5e-3,
        weight_decay=0.0,
        epochs=1,
        eval_every=10,
        primary_task="syn",
        output_dir=str(tmp_path / "run"),
        tasks=[TaskSpec(name="syn", kind=TaskKind.SYNTHETIC, synthetic=SyntheticSpec(train_size=12, dev_size=6))],
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


# ============================================================================
# Markers
# ============================================================================

def pytest_configure(config):
    """Register custom markers."""
    config.addinivalue_line(
        "markers", "slow: marks tests as slow (deselect with '-m \"not slow\"')"
    )
    config.addinivalue_line(
        "markers", "integration: marks tests that need real dataset downloads"
    )
