import shutil
from pathlib import Path

import pytest

CORPUS = Path(__file__).parent / "corpus"


def read_corpus(name: str) -> dict[str, bytes]:
    base = CORPUS / name
    return {p.name: p.read_bytes() for p in sorted(base.glob("*.ts*"))}


@pytest.fixture
def listing1() -> dict[str, bytes]:
    return read_corpus("listing1")


@pytest.fixture
def listing2() -> dict[str, bytes]:
    return read_corpus("listing2")


@pytest.fixture
def listing1_workspace(tmp_path) -> Path:
    for p in (CORPUS / "listing1").glob("*.ts*"):
        shutil.copy(p, tmp_path)
    return tmp_path


@pytest.fixture
def listing2_workspace(tmp_path) -> Path:
    for p in (CORPUS / "listing2").glob("*.ts*"):
        shutil.copy(p, tmp_path)
    return tmp_path
