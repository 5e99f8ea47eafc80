import pytest

from multiq.data import dataset_path, image_ids, load_dataset, synthetic_features
from multiq.grammar import Lexicon


@pytest.fixture(scope="session")
def lexicon() -> Lexicon:
    return Lexicon.from_file(dataset_path("lexicon.tsv"))


@pytest.fixture(scope="session")
def structured(lexicon):
    return load_dataset(dataset_path("structured.jsonl"), "structured", lexicon)


@pytest.fixture(scope="session")
def unstructured(lexicon):
    return load_dataset(dataset_path("unstructured.jsonl"), "unstructured", lexicon)


@pytest.fixture(scope="session")
def structured_sample(lexicon):
    return load_dataset(dataset_path("structured_sample.jsonl"), "structured", lexicon)


@pytest.fixture(scope="session")
def unstructured_sample(lexicon):
    return load_dataset(dataset_path("unstructured_sample.jsonl"), "unstructured", lexicon)


@pytest.fixture(scope="session")
def sample_features(structured_sample):
    return synthetic_features(image_ids(structured_sample), dim=20, seed=11)
