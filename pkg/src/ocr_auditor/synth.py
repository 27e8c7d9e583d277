"""Deterministic synthetic page generator producing image and mask pairs."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .errors import InputError, ValidationError
from .imaging import GrayImage, Label, PixelClassMask

__all__ = [
    "FONT_5X7",
    "Glyph",
    "Uniform",
    "LinearGradient",
    "Spotlight",
    "ShadowRect",
    "SceneSpec",
    "render",
    "load_scene_spec",
]

# rows top to bottom, '#' = ink
FONT_5X7 = {
    0: (".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."),
    1: ("..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."),
    2: (".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"),
    3: ("#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."),
    4: ("...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."),
    5: ("#####", "#....", "####.", "....#", "....#", "#...#", ".###."),
    6: ("..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."),
    7: ("#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."),
    8: (".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."),
    9: (".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."),
}
_GLYPH_BITS = {d: np.array([[c == "#" for c in row] for row in rows]) for d, rows in FONT_5X7.items()}


@dataclass(frozen=True)
class Glyph:
    digit: int
    x: int
    y: int
    scale: int = 1

    @property
    def size(self) -> tuple[int, int]:
        return 5 * self.scale, 7 * self.scale


@dataclass(frozen=True)
class Uniform:
    m: float

    def multiplier(self, xs, ys):
        return np.full(np.broadcast(xs, ys).shape, float(self.m))


@dataclass(frozen=True)
class LinearGradient:
    """Multiplier ``m0`` at coordinate 0 rising linearly to ``m1`` at the last column/row."""

    m0: float
    m1: float
    axis: str = "x"

    def multiplier(self, xs, ys):
        coord = xs if self.axis == "x" else ys
        n = (xs.shape[1] if self.axis == "x" else ys.shape[0]) - 1
        t = coord / n if n > 0 else np.zeros_like(coord, dtype=float)
        return np.broadcast_to(self.m0 + (self.m1 - self.m0) * t, np.broadcast(xs, ys).shape)


@dataclass(frozen=True)
class Spotlight:
    cx: float
    cy: float
    sigma: float
    amplitude: float

    def multiplier(self, xs, ys):
        r2 = (xs - self.cx) ** 2 + (ys - self.cy) ** 2
        return 1.0 + self.amplitude * np.exp(-r2 / (2.0 * self.sigma**2))


@dataclass(frozen=True)
class ShadowRect:
    box: tuple[int, int, int, int]
    m: float

    def multiplier(self, xs, ys):
        x, y, w, h = self.box
        inside = (xs >= x) & (xs < x + w) & (ys >= y) & (ys < y + h)
        return np.where(inside, float(self.m), 1.0)


Field = Union[Uniform, LinearGradient, Spotlight, ShadowRect]
_FIELD_TYPES = {"uniform": Uniform, "linear_gradient": LinearGradient, "spotlight": Spotlight, "shadow_rect": ShadowRect}
_FIELD_NAMES = {v: k for k, v in _FIELD_TYPES.items()}


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    bg_level: int = 200
    char_level: int = 50
    glyphs: tuple[Glyph, ...] = ()
    fields: tuple[Field, ...] = ()
    seed: int = 0
    noise_sigma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "glyphs", tuple(self.glyphs))
        object.__setattr__(self, "fields", tuple(self.fields))
        if self.width < 1 or self.height < 1:
            raise ValidationError("canvas must be at least 1x1")
        for name in ("bg_level", "char_level"):
            if not 0 <= getattr(self, name) <= 255:
                raise ValidationError(f"{name} must lie in [0, 255]")
        if self.noise_sigma < 0:
            raise ValidationError("noise_sigma must be >= 0")
        for g in self.glyphs:
            if g.digit not in FONT_5X7:
                raise ValidationError(f"no glyph for {g.digit!r}; the built-in font has digits 0-9")
            if g.scale < 1:
                raise ValidationError("glyph scale must be >= 1")
            w, h = g.size
            if g.x < 0 or g.y < 0 or g.x + w > self.width or g.y + h > self.height:
                raise ValidationError(f"glyph {g.digit} at ({g.x}, {g.y}) does not fit the canvas")
        for f in self.fields:
            self._check_field(f)

    @staticmethod
    def _check_field(f) -> None:
        if isinstance(f, (Uniform, ShadowRect)):
            if f.m < 0:
                raise ValidationError("field multipliers must be >= 0")
        elif isinstance(f, LinearGradient):
            if f.m0 < 0 or f.m1 < 0:
                raise ValidationError("gradient multipliers must be >= 0")
            if f.axis not in ("x", "y"):
                raise ValidationError("gradient axis must be 'x' or 'y'")
        elif isinstance(f, Spotlight):
            if f.sigma <= 0:
                raise ValidationError("spotlight sigma must be > 0")
            if f.amplitude < -1:
                raise ValidationError("spotlight amplitude must be >= -1 (multiplier >= 0)")
        else:
            raise ValidationError(f"unknown illumination field {f!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "SceneSpec":
        try:
            glyphs = tuple(Glyph(int(g["digit"]), int(g["x"]), int(g["y"]), int(g.get("scale", 1)))
                           for g in d.get("glyphs", []))
            fields = []
            for f in d.get("fields", []):
                f = dict(f)
                kind = f.pop("type")
                if kind not in _FIELD_TYPES:
                    raise ValidationError(f"unknown field type {kind!r}")
                if kind == "shadow_rect":
                    f["box"] = tuple(int(v) for v in f["box"])
                fields.append(_FIELD_TYPES[kind](**f))
            return cls(
                width=int(d["width"]),
                height=int(d["height"]),
                bg_level=int(d.get("bg_level", 200)),
                char_level=int(d.get("char_level", 50)),
                glyphs=glyphs,
                fields=tuple(fields),
                seed=int(d.get("seed", 0)),
                noise_sigma=float(d.get("noise_sigma", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"invalid scene spec: {exc!r}") from None

    def to_dict(self) -> dict:
        def field_dict(f):
            d = {"type": _FIELD_NAMES[type(f)]}
            d.update({k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(f).items()})
            return d

        return {
            "width": self.width,
            "height": self.height,
            "bg_level": self.bg_level,
            "char_level": self.char_level,
            "glyphs": [vars(g).copy() for g in self.glyphs],
            "fields": [field_dict(f) for f in self.fields],
            "seed": self.seed,
            "noise_sigma": self.noise_sigma,
        }


def load_scene_spec(path: str | os.PathLike) -> SceneSpec:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read scene spec {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"scene spec {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ValidationError("scene spec must be a JSON object")
    return SceneSpec.from_dict(data)


def glyph_mask(spec: SceneSpec) -> np.ndarray:
    ink = np.zeros((spec.height, spec.width), dtype=bool)
    for g in spec.glyphs:
        bits = np.kron(_GLYPH_BITS[g.digit], np.ones((g.scale, g.scale), dtype=bool))
        h, w = bits.shape
        ink[g.y : g.y + h, g.x : g.x + w] |= bits
    return ink


def illumination(spec: SceneSpec) -> np.ndarray:
    """Pointwise product of all field multipliers (ones when there are no fields)."""
    ys, xs = np.mgrid[0 : spec.height, 0 : spec.width].astype(np.float64)
    out = np.ones((spec.height, spec.width))
    for f in spec.fields:
        out = out * f.multiplier(xs, ys)
    return out


def render(spec: SceneSpec) -> tuple[GrayImage, PixelClassMask]:
    ink = glyph_mask(spec)
    base = np.where(ink, float(spec.char_level), float(spec.bg_level))
    value = base * illumination(spec)
    if spec.noise_sigma > 0:
        value = value + np.random.default_rng(spec.seed).normal(0.0, spec.noise_sigma, value.shape)
    pixels = np.clip(np.floor(value + 0.5), 0, 255).astype(np.uint8)
    labels = np.where(ink, Label.CHARACTER, Label.BACKGROUND).astype(np.uint8)
    return GrayImage(pixels), PixelClassMask(labels)
