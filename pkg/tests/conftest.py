from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ocr_auditor import kernels
from ocr_auditor.synth import load_scene_spec, render

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"
LEVEL_FIXTURES = {"I": "level1_uniform", "II": "level2_gradient", "III": "level3_spotlight"}


@pytest.fixture(params=sorted(kernels.BACKENDS))
def backend(request):
    with kernels.using(request.param):
        yield request.param


@pytest.fixture
def level_fixture():
    def get(level: str):
        return render(load_scene_spec(FIXTURES / f"{LEVEL_FIXTURES[level]}.json"))
    return get


def write_fixture_pair(tmp_path: Path, level: str) -> tuple[Path, Path]:
    from ocr_auditor.imaging import write_pgm

    image, mask = render(load_scene_spec(FIXTURES / f"{LEVEL_FIXTURES[level]}.json"))
    img_path, mask_path = tmp_path / f"{level}.pgm", tmp_path / f"{level}.mask.pgm"
    write_pgm(img_path, image)
    write_pgm(mask_path, mask)
    return img_path, mask_path


@st.composite
def image_and_mask(draw, max_side=16, ignore=True):
    h = draw(st.integers(1, max_side))
    w = draw(st.integers(1, max_side))
    pixels = draw(arrays(np.uint8, (h, w)))
    codes = [0, 255, 128] if ignore else [0, 255]
    labels = draw(arrays(np.uint8, (h, w), elements=st.sampled_from(codes)))
    return pixels, labels


@st.composite
def two_class_image(draw, max_side=16):
    """Image/mask pair guaranteed to contain both a Character and a Background pixel."""
    pixels, labels = draw(image_and_mask(max_side=max_side))
    flat = labels.reshape(-1)
    if flat.size < 2:
        pixels = np.vstack([pixels, pixels]) if pixels.shape[1] == 1 else pixels
        labels = np.vstack([labels, labels]) if labels.shape[1] == 1 else labels
        flat = labels.reshape(-1)
    flat[0] = 0
    flat[-1] = 255
    return pixels, labels


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
