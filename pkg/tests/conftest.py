import sys
from pathlib import Path

import pytest

# repository root, so `src.*` and `main` import without installation
ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))


@pytest.fixture(autouse=True)
def _single_thread_default(monkeypatch):
    monkeypatch.setenv("FALCONERLAB_THREADS", "1")
