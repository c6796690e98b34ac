import os
import sys

import pytest

FIXTURE_DIR = os.path.join(os.path.dirname(__file__), "fixtures")
SAMPLE_XLSX = os.path.join(FIXTURE_DIR, "sample.xlsx")

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "scripts"))


@pytest.fixture(scope="session")
def sample_path() -> str:
    return SAMPLE_XLSX


@pytest.fixture()
def sample_model(sample_path):
    from sheetair.workbook import load_workbook

    return load_workbook(sample_path)


@pytest.fixture()
def sample_graph(sample_model):
    from sheetair.graphbuild import build_graph

    return build_graph(sample_model, 2)
