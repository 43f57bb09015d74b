import os
import sys
import tempfile

import pytest

# Logs and config.json go to a scratch directory, never the user's app dir.
os.environ.setdefault("SPANGUARD_HOME", tempfile.mkdtemp(prefix="spanguard-test-"))
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))


@pytest.fixture
def corpus_dir():
    from core.resources import corpus_dir as bundled

    return bundled()


@pytest.fixture
def load_fixture():
    """Parse and validate one of the bundled transformation fixtures."""
    from core.resources import fixture_path
    from ir.validate import load_program

    def _load(name):
        with open(fixture_path(name), "r", encoding="utf-8") as f:
            return load_program(f.read())

    return _load
