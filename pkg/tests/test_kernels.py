import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ocr_auditor import _pykernels, kernels
from oracles import flood_fill_components

binary = st.integers(1, 24).flatmap(
    lambda h: st.integers(1, 24).flatmap(lambda w: arrays(np.uint8, (h, w), elements=st.sampled_from([0, 1])))
)


def components_as_sets(labels, n):
    return sorted(
        (frozenset((int(x), int(y)) for y, x in zip(*np.nonzero(labels == k))) for k in range(1, n + 1)),
        key=sorted,
    )


@pytest.mark.parametrize("name", sorted(kernels.BACKENDS))
@pytest.mark.parametrize("connectivity", [4, 8])
@settings(max_examples=150, deadline=None)
@given(fg=binary)
def test_labeling_matches_flood_fill(name, fg, connectivity):
    labels, n = kernels.BACKENDS[name].label_components(fg, connectivity)
    points = {(int(x), int(y)) for y, x in zip(*np.nonzero(fg))}
    expected = sorted((frozenset(c) for c in flood_fill_components(points, connectivity)), key=sorted)
    assert components_as_sets(labels, n) == expected


@pytest.mark.skipif("cython" not in kernels.BACKENDS, reason="compiled kernels not built")
@settings(max_examples=150, deadline=None)
@given(fg=binary, connectivity=st.sampled_from([4, 8]))
def test_backends_bit_identical(fg, connectivity):
    c = kernels.BACKENDS["cython"]
    la, na = c.label_components(fg, connectivity)
    lb, nb = _pykernels.label_components(fg, connectivity)
    assert na == nb
    np.testing.assert_array_equal(la, lb)
    np.testing.assert_array_equal(c.component_boxes(la, na), _pykernels.component_boxes(lb, nb))


def test_label_ids_follow_raster_order(backend):
    fg = np.array([[0, 0, 1], [1, 0, 0], [1, 0, 1]], dtype=np.uint8)
    labels, n = kernels.label_components(fg, 4)
    assert n == 3
    assert labels[0, 2] == 1 and labels[1, 0] == 2 and labels[2, 2] == 3


def test_u_shape_merges_late(backend):
    # the two arms only join on the last row
    fg = np.array([[1, 0, 1], [1, 0, 1], [1, 1, 1]], dtype=np.uint8)
    _, n = kernels.label_components(fg, 4)
    assert n == 1


def test_box_histograms(backend):
    image = np.array([[10, 10], [200, 200]], dtype=np.uint8)
    labels = np.array([[0, 128], [255, 255]], dtype=np.uint8)
    char, bg = kernels.box_histograms(image, labels, 0, 2, 0, 2)
    assert char[10] == 1 and char.sum() == 1
    assert bg[200] == 2 and bg.sum() == 2
    char, bg = kernels.box_histograms(image, labels, 1, 2, 0, 1)
    assert char.sum() == 0 and bg[200] == 1


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        kernels.set_backend("fortran")


def test_env_var_forces_fallback():
    import subprocess
    import sys

    env = dict(__import__("os").environ, OCR_AUDITOR_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from ocr_auditor import kernels; print(kernels.backend_name())"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
