import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from normalkit.triangulation import load_triangulation  # noqa: E402

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
CORPUS_FILES = sorted(CORPUS.glob("*.tri"))
CORPUS_NAMES = [p.stem for p in CORPUS_FILES]


def corpus_tri(name):
    return load_triangulation(CORPUS / f"{name}.tri")


@pytest.fixture(params=CORPUS_NAMES)
def corpus_name(request):
    return request.param


@pytest.fixture
def tri(corpus_name):
    return corpus_tri(corpus_name)


@pytest.fixture(autouse=True)
def _single_thread(monkeypatch):
    # enumeration reads this; tests that care set it explicitly
    if "NORMALKIT_THREADS" not in os.environ:
        monkeypatch.setenv("NORMALKIT_THREADS", "1")
