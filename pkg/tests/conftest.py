import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pads.harness.config import parse_config  # noqa: E402
from pads.harness.runner import build_world, run_options, run_simulation  # noqa: E402

ACCEPTANCE: list[str] = []


def run_config(doc, digest_steps=()):
    cfg = parse_config(doc)
    return run_simulation(build_world(cfg), run_options(cfg, digest_steps), cfg.processes)


@pytest.fixture
def run():
    return run_config


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
