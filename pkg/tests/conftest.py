import numpy as np
import pytest

from realaug.bank import bank_build
from realaug.fixture import generate_frames
from realaug.placeability import ground_fit


@pytest.fixture(scope="session")
def fixture_frames():
    frames, truths = generate_frames(seed=7, n_frames=12)
    return frames, truths


@pytest.fixture(scope="session")
def fixture_masks(fixture_frames):
    frames, _ = fixture_frames
    return [ground_fit(f.cloud) for f in frames]


@pytest.fixture(scope="session")
def fixture_bank(fixture_frames):
    return bank_build(fixture_frames[0], min_points=5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory, fixture_frames):
    from realaug.io import write_dataset

    root = tmp_path_factory.mktemp("fixture_ds")
    write_dataset(fixture_frames[0], root)
    return root


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def acceptance():
    def record(n: int, ok: bool, detail: str) -> None:
        ACCEPTANCE[n] = (ok, detail)
        print(f"ACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
