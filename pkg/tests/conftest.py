import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from topicality.embeddings import LabeledDataset
from topicality.synthetic import SyntheticSpec, generate_dataset

settings.register_profile(
    "default",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# The pinned benchmark: 2000 messages, 768 dims of which 100 carry signal,
# calibrated class separation.  Everything the acceptance suite measures is
# measured here.
BENCHMARK_SPEC = SyntheticSpec(
    n_samples=2000,
    dim=768,
    n_informative=100,
    class_separation=1.0,
    seed=42,
)


@pytest.fixture(scope="session")
def benchmark_spec() -> SyntheticSpec:
    return BENCHMARK_SPEC


@pytest.fixture(scope="session")
def benchmark() -> tuple[LabeledDataset, np.ndarray]:
    """(dataset, informative dims) for the pinned benchmark."""
    return generate_dataset(BENCHMARK_SPEC)


@pytest.fixture(scope="session")
def small_data() -> LabeledDataset:
    """Well separated 240 x 12 dataset for fast classifier checks."""
    spec = SyntheticSpec(
        n_samples=240, dim=12, n_informative=6, class_separation=2.5, seed=3
    )
    data, _ = generate_dataset(spec)
    return data


@pytest.fixture(scope="session")
def tiny_data() -> LabeledDataset:
    """60 x 5, still separable; for the slowest per-fit families."""
    spec = SyntheticSpec(
        n_samples=60, dim=5, n_informative=3, class_separation=3.0, seed=11
    )
    data, _ = generate_dataset(spec)
    return data
