import numpy as np
import pytest

from soundsight.image import GrayImage
from soundsight.schemes import EncodingScheme, RectifiedTanhMap, get_preset
from soundsight.stimuli import corpus_read, corpus_write, gen_lesson_corpus, gen_object_corpus


@pytest.fixture(scope="session")
def primary():
    return get_preset("primary")


@pytest.fixture(scope="session")
def tanh2():
    """The tanh map at the modified scheme's 2 s scan (decodable at 64x64)."""
    return EncodingScheme("tanh2", RectifiedTanhMap(7000.0, 0.035), duration_s=2.0)


@pytest.fixture(scope="session")
def long_scheme():
    return get_preset("long")


@pytest.fixture(scope="session")
def tanh_scheme():
    return get_preset("tanh")


@pytest.fixture
def black64():
    return GrayImage(np.zeros((64, 64), dtype=np.uint8))


@pytest.fixture(scope="session")
def small_corpus_dir(tmp_path_factory):
    """Lessons at size 32 plus a reduced object corpus (12 per class)."""
    out = tmp_path_factory.mktemp("corpus")
    corpus_write(gen_lesson_corpus(32), out)
    corpus_write(gen_object_corpus(per_class=12, size=32, seed=0), out)
    return out


@pytest.fixture(scope="session")
def small_corpus(small_corpus_dir):
    return corpus_read(small_corpus_dir)
