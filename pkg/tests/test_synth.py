import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ocr_auditor.errors import ValidationError
from ocr_auditor.imaging import Label
from ocr_auditor.synth import (
    FONT_5X7,
    Glyph,
    LinearGradient,
    SceneSpec,
    ShadowRect,
    Spotlight,
    Uniform,
    glyph_mask,
    illumination,
    load_scene_spec,
    render,
)
from conftest import FIXTURES, LEVEL_FIXTURES


def test_font_shape():
    assert set(FONT_5X7) == set(range(10))
    assert all(len(rows) == 7 and all(len(r) == 5 for r in rows) for rows in FONT_5X7.values())


def test_uniform_two_values():
    spec = SceneSpec(30, 12, 200, 50, [Glyph(3, 2, 2), Glyph(8, 10, 2, scale=1)])
    image, mask = render(spec)
    assert set(np.unique(image.data).tolist()) == {50, 200}
    assert (image.data[mask.labels == Label.CHARACTER] == 50).all()
    assert (image.data[mask.labels == Label.BACKGROUND] == 200).all()


def test_scaled_glyph_pixels():
    spec = SceneSpec(12, 16, glyphs=[Glyph(1, 1, 1, scale=2)])
    ink = glyph_mask(spec)
    expected = sum(row.count("#") for row in FONT_5X7[1]) * 4
    assert ink.sum() == expected
    assert ink[1:15, 1:11].sum() == expected


def test_shadow_rect_arithmetic():
    spec = SceneSpec(10, 10, 200, 50, [Glyph(1, 0, 0)], [ShadowRect((5, 0, 5, 10), 0.45)])
    image, mask = render(spec)
    assert image.data[0, 9] == 90  # 200 * 0.45
    assert image.data[0, 0] == 200


def test_spotlight_clamps():
    spec = SceneSpec(20, 20, 200, 60, [Glyph(8, 8, 6)], [Spotlight(10, 9, 4, 4.0)])
    image, mask = render(spec)
    assert image.data[9, 10] == 255
    assert image.data.max() == 255


def test_gradient_endpoints():
    m = illumination(SceneSpec(11, 3, fields=[LinearGradient(0.5, 1.0, "x")]))
    assert m[0, 0] == pytest.approx(0.5) and m[0, -1] == pytest.approx(1.0) and m[0, 5] == pytest.approx(0.75)


def test_noise_seeded():
    spec = SceneSpec(16, 16, noise_sigma=5.0, seed=7)
    a, _ = render(spec)
    b, _ = render(spec)
    c, _ = render(SceneSpec(16, 16, noise_sigma=5.0, seed=8))
    assert a == b and a != c


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(width=0, height=5),
        dict(width=5, height=5, bg_level=300),
        dict(width=5, height=5, glyphs=[Glyph(1, 2, 0)]),
        dict(width=10, height=10, glyphs=[Glyph(12, 0, 0)]),
        dict(width=5, height=5, fields=[Uniform(-1)]),
        dict(width=5, height=5, fields=[Spotlight(0, 0, 0, 1)]),
        dict(width=5, height=5, fields=[LinearGradient(1, 1, "z")]),
        dict(width=5, height=5, noise_sigma=-1),
    ],
)
def test_invalid_specs(kwargs):
    with pytest.raises(ValidationError):
        SceneSpec(**kwargs)


def test_from_dict_errors():
    with pytest.raises(ValidationError):
        SceneSpec.from_dict({"width": 5})
    with pytest.raises(ValidationError):
        SceneSpec.from_dict({"width": 5, "height": 5, "fields": [{"type": "laser"}]})


@pytest.mark.parametrize("name", LEVEL_FIXTURES.values())
def test_fixture_spec_round_trip(name):
    spec = load_scene_spec(FIXTURES / f"{name}.json")
    assert SceneSpec.from_dict(spec.to_dict()) == spec


fields = st.lists(
    st.one_of(
        st.builds(Uniform, st.sampled_from([0.5, 0.75, 1.0, 1.25])),
        st.builds(LinearGradient, st.floats(0, 2), st.floats(0, 2), st.sampled_from(["x", "y"])),
        st.builds(Spotlight, st.floats(0, 20), st.floats(0, 20), st.floats(1, 10), st.floats(-1, 4)),
        st.builds(ShadowRect, st.tuples(st.integers(0, 10), st.integers(0, 10), st.integers(1, 10), st.integers(1, 10)),
                  st.sampled_from([0.25, 0.5])),
    ),
    max_size=4,
)
specs = st.builds(
    lambda f, seed, sigma, d, bg, ch: SceneSpec(20, 16, bg, ch, [Glyph(d, 3, 4, 1), Glyph((d + 3) % 10, 11, 4, 1)], f, seed, sigma),
    fields, st.integers(0, 2**31), st.sampled_from([0.0, 2.0]), st.integers(0, 9), st.integers(0, 255), st.integers(0, 255),
)


@settings(max_examples=100, deadline=None)
@given(spec=specs)
def test_determinism(spec):
    a_img, a_mask = render(spec)
    b_img, b_mask = render(SceneSpec.from_dict(spec.to_dict()))
    assert a_img.data.tobytes() == b_img.data.tobytes()
    assert a_mask.labels.tobytes() == b_mask.labels.tobytes()


@settings(max_examples=100, deadline=None)
@given(spec=specs)
def test_mask_fidelity(spec):
    _, mask = render(spec)
    np.testing.assert_array_equal(mask.labels == Label.CHARACTER, glyph_mask(spec))


@settings(max_examples=100, deadline=None)
@given(spec=specs, data=st.data())
def test_field_order_irrelevant(spec, data):
    perm = data.draw(st.permutations(spec.fields))
    other = SceneSpec(spec.width, spec.height, spec.bg_level, spec.char_level, spec.glyphs, perm)
    np.testing.assert_allclose(illumination(spec), illumination(other), rtol=1e-12)


def test_field_order_exact_for_dyadic_multipliers():
    fs = [Uniform(0.5), ShadowRect((0, 0, 8, 8), 0.25), Uniform(1.25)]
    base = SceneSpec(16, 16, 200, 40, [Glyph(0, 2, 2)], fs)
    for perm in itertools.permutations(fs):
        img, _ = render(SceneSpec(16, 16, 200, 40, [Glyph(0, 2, 2)], perm))
        assert img == render(base)[0]
