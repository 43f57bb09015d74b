"""Locating files that ship with the project (the bundled corpus)."""

import os


def get_base_path() -> str:
    """Get the project root directory.

    resources.py lives at src/core/resources.py; the root is three levels up.
    """
    return os.path.dirname(
        os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    )


def resource_path(relative_path: str) -> str:
    """Get absolute path to a bundled resource file.

    Args:
        relative_path: Path relative to project root (e.g., 'corpus/manifest.json').

    Returns:
        Absolute path.
    """
    return os.path.join(get_base_path(), relative_path)


def corpus_dir() -> str:
    """Directory of the bundled corpus (manifest.json + cases)."""
    return resource_path("corpus")


def fixture_path(name: str) -> str:
    """Path of a transformation fixture under corpus/fixtures/."""
    return os.path.join(corpus_dir(), "fixtures", name)
