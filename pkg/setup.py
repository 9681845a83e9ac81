#!/usr/bin/env python3
"""
Setup script for falconerlab
Creates a virtual environment, installs the Python dependencies and runs a smoke check
"""

import subprocess
import sys
from pathlib import Path

# Import rich logging after checking if it's available
try:
    from src.logger import logger
except ImportError:
    # Fallback to plain print for initial setup
    class DummyLogger:
        def step(self, msg, prefix="SETUP"): print(f"[{prefix}] → {msg}")
        def success(self, msg, prefix="SETUP"): print(f"[{prefix}] ✓ {msg}")
        def error(self, msg, prefix="SETUP"): print(f"[{prefix}] ✗ {msg}")
        def warning(self, msg, prefix="SETUP"): print(f"[{prefix}] ⚠ {msg}")
        def info(self, msg, prefix="SETUP"): print(f"[{prefix}] {msg}")
        def header(self, title, subtitle=None): print(f"\n=== {title} ===\n{subtitle or ''}")
        def section(self, title): print(f"\n=== {title} ===")

    logger = DummyLogger()

PROJECT_ROOT = Path(__file__).parent
VENV = PROJECT_ROOT / "venv"
SMOKE_COMMAND = ["thresholds", "--chain", "distance-bound", "--quiet"]


def run_command(cmd, description, check=True):
    """Run a command with error handling"""
    logger.step(description, "SETUP")
    try:
        result = subprocess.run(cmd, check=check, capture_output=True, text=True)
        if result.stdout and result.stdout.strip():
            logger.info(result.stdout.strip(), "OUTPUT")
        logger.success(f"{description} completed successfully", "SETUP")
        return result.returncode == 0
    except subprocess.CalledProcessError as e:
        logger.error(f"{description} failed: {e}", "SETUP")
        if e.stderr:
            logger.error(f"Error: {e.stderr.strip()}", "SETUP")
        return False
    except OSError as e:
        logger.error(f"{description} failed: {e}", "SETUP")
        return False


def check_python_version():
    """math.lcm and the typing used here need Python 3.9"""
    logger.step("Checking Python version", "SETUP")
    if sys.version_info < (3, 9):
        logger.error(f"Python 3.9+ required, found {sys.version.split()[0]}", "SETUP")
        return False
    logger.success(f"Python {sys.version.split()[0]} detected", "SETUP")
    return True


def venv_python() -> Path:
    if sys.platform.startswith("win"):
        return VENV / "Scripts" / "python.exe"
    return VENV / "bin" / "python"


def setup_virtual_environment():
    """Create venv/ and install requirements.txt into it"""
    requirements_file = PROJECT_ROOT / "requirements.txt"
    if not requirements_file.exists():
        logger.error("requirements.txt not found", "SETUP")
        return False

    if not VENV.exists():
        if not run_command([sys.executable, "-m", "venv", str(VENV)], "Creating virtual environment"):
            return False
    else:
        logger.info(f"Reusing virtual environment at {VENV}", "VENV")

    python = str(venv_python())
    if not run_command([python, "-m", "pip", "install", "--upgrade", "pip"], "Upgrading pip"):
        return False
    if not run_command([python, "-m", "pip", "install", "-r", str(requirements_file)], "Installing Python packages"):
        return False
    logger.success(f"Virtual environment set up at {VENV}", "VENV")
    return True


def run_smoke_check():
    """The distance-bound preset chain must print the exact threshold 4/7"""
    logger.step("Running smoke check", "TEST")
    result = subprocess.run([str(venv_python()), str(PROJECT_ROOT / "main.py"), *SMOKE_COMMAND],
                            capture_output=True, text=True)
    if result.returncode == 0 and '"threshold": "4/7"' in result.stdout:
        logger.success("thresholds --chain distance-bound gives 4/7", "TEST")
        return True
    logger.error(f"smoke check failed with exit code {result.returncode}", "TEST")
    if result.stderr:
        logger.error(result.stderr.strip(), "TEST")
    return False


def main():
    """Main setup function"""
    logger.header("falconerlab setup", "Creates venv/, installs dependencies and runs a smoke check.")

    if not check_python_version():
        sys.exit(1)

    logger.section("Installing Python dependencies")
    if not setup_virtual_environment():
        sys.exit(1)

    logger.section("Smoke check")
    if not run_smoke_check():
        sys.exit(1)

    logger.section("Setup Complete!")
    logger.info("Run the tests:       venv/bin/python -m pytest", "USAGE")
    logger.info("Run the slow tests:  venv/bin/python -m pytest -m slow", "USAGE")
    logger.info("Try:                 venv/bin/python main.py classify \"x*y + z\"", "USAGE")


if __name__ == "__main__":
    main()
