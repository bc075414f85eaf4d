"""Basic tests to ensure the project structure is valid."""

import sys
from pathlib import Path


def test_project_structure():
    """Test that the basic project structure exists."""
    project_root = Path(__file__).parent.parent

    assert (project_root / "src" / "concavity_lab").exists(), "package directory should exist"
    assert (project_root / "requirements.txt").exists(), "requirements.txt should exist"
    assert (project_root / "requirements-dev.txt").exists(), "requirements-dev.txt should exist"
    assert sorted((project_root / "config" / "corpus").glob("*.json")), "corpus configs should be shipped"


def test_modules_import():
    import concavity_lab
    from concavity_lab import body, cli, measure, operator, quad, scan, suite, verify

    assert concavity_lab.__version__
    for module in (body, cli, measure, operator, quad, scan, suite, verify):
        assert module.__all__


def test_requirements_files_readable():
    """Test that requirements files are readable and contain content."""
    project_root = Path(__file__).parent.parent

    content = (project_root / "requirements.txt").read_text().strip()
    for package in ("numpy", "scipy", "typer"):
        assert package in content, f"requirements.txt should pin {package}"

    dev_content = (project_root / "requirements-dev.txt").read_text().strip()
    assert "pytest" in dev_content, "requirements-dev.txt should contain pytest"
    assert "hypothesis" in dev_content


def test_python_version():
    """Test that we're running a supported Python version."""
    assert sys.version_info >= (3, 8), "Python 3.8+ is required"
