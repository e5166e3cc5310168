from pathlib import Path

import pytest

DATA = Path(__file__).resolve().parents[1] / "src" / "hfrag" / "data"


@pytest.fixture
def toy_config():
    return DATA / "toy" / "pipeline.yaml"


@pytest.fixture
def monotone_config():
    return DATA / "monotone" / "pipeline.yaml"


@pytest.fixture
def toy_data(toy_config, tmp_path):
    from hfrag.cli import load_config, load_dataset

    return load_dataset(load_config(toy_config, {"output_dir": str(tmp_path)}))


@pytest.fixture
def monotone_data(monotone_config, tmp_path):
    from hfrag.cli import load_config, load_dataset

    return load_dataset(load_config(monotone_config, {"output_dir": str(tmp_path)}))


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
