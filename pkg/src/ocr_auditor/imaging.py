"""Image and mask decoding, global threshold fallback and character region extraction."""
from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import InputError, ValidationError

__all__ = [
    "Label",
    "GrayImage",
    "PixelClassMask",
    "CharRegion",
    "load_gray_image",
    "load_mask",
    "estimate_mask",
    "extract_char_regions",
    "load_region_sidecar",
    "regions_from_boxes",
    "read_pgm",
    "write_pgm",
    "rgb_to_gray",
    "otsu_threshold",
]


class Label(enum.IntEnum):
    """Pixel classes; the values double as the mask file byte encoding."""

    CHARACTER = 0
    IGNORE = 128
    BACKGROUND = 255


def _frozen(arr: np.ndarray, dtype) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True, order="C")
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit single channel raster stored as a read-only (height, width) array."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError(f"image must be a non-empty 2-D raster, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if np.issubdtype(arr.dtype, np.bool_) or arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValidationError("pixel values must lie in [0, 255]")
            if np.issubdtype(arr.dtype, np.floating) and not np.all(arr == np.round(arr)):
                raise ValidationError("pixel values must be integers")
        object.__setattr__(self, "data", _frozen(arr, np.uint8))

    @classmethod
    def from_rows(cls, width: int, height: int, values: Sequence[int]) -> "GrayImage":
        if len(values) != width * height:
            raise ValidationError(f"expected {width * height} values, got {len(values)}")
        return cls(np.asarray(values, dtype=np.int64).reshape(height, width))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class PixelClassMask:
    """Per-pixel :class:`Label` codes aligned with a :class:`GrayImage`."""

    labels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError(f"mask must be a non-empty 2-D raster, got shape {arr.shape}")
        bad = ~np.isin(arr, [int(v) for v in Label])
        if bad.any():
            y, x = (int(v) for v in np.argwhere(bad)[0])
            raise ValidationError(f"illegal mask value {int(arr[y, x])} at ({x}, {y})")
        object.__setattr__(self, "labels", _frozen(arr, np.uint8))

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    def label_at(self, x: int, y: int) -> Label:
        return Label(int(self.labels[y, x]))

    def count(self, label: Label) -> int:
        return int(np.count_nonzero(self.labels == label))

    def __eq__(self, other):
        if not isinstance(other, PixelClassMask):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.labels, other.labels))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class CharRegion:
    """One-character region.

    ``box`` is ``(x, y, w, h)``, the minimal box around ``members`` (flat
    row-major indices of the region's Character pixels, sorted). ``pad`` is
    the margin used when sampling Background context around the box.
    """

    box: tuple[int, int, int, int]
    members: np.ndarray = field(repr=False)
    pad: int = 2

    def __post_init__(self):
        object.__setattr__(self, "box", tuple(int(v) for v in self.box))
        object.__setattr__(self, "members", _frozen(np.sort(np.asarray(self.members).ravel()), np.int64))
        if self.pad < 0:
            raise ValidationError("pad must be >= 0")

    def coords(self, width: int) -> set[tuple[int, int]]:
        """Member pixels as a set of ``(x, y)`` tuples."""
        ys, xs = np.divmod(self.members, width)
        return set(zip(xs.tolist(), ys.tolist()))

    def padded_box(self, width: int, height: int) -> tuple[int, int, int, int]:
        x, y, w, h = self.box
        x0, y0 = max(0, x - self.pad), max(0, y - self.pad)
        x1, y1 = min(width, x + w + self.pad), min(height, y + h + self.pad)
        return (x0, y0, x1 - x0, y1 - y0)


# --- decoding -----------------------------------------------------------------

def _pnm_tokens(buf: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping ``#`` comments."""
    tokens: list[bytes] = []
    i, n = 0, len(buf)
    while len(tokens) < count:
        while i < n and buf[i : i + 1].isspace():
            i += 1
        if i >= n:
            raise InputError("truncated PNM header")
        if buf[i : i + 1] == b"#":
            while i < n and buf[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < n and not buf[j : j + 1].isspace() and buf[j : j + 1] != b"#":
            j += 1
        tokens.append(buf[i:j])
        i = j
    # exactly one whitespace byte separates the header from the raster
    if i >= n or not buf[i : i + 1].isspace():
        raise InputError("malformed PNM header")
    return tokens, i + 1


def read_pgm(buf: bytes) -> np.ndarray:
    """Decode binary PGM (P5, maxval 255) or PPM (P6, maxval 255) bytes."""
    magic = buf[:2]
    if magic not in (b"P5", b"P6"):
        raise InputError(f"unsupported PNM magic {magic!r}")
    tokens, offset = _pnm_tokens(buf[2:], 3)
    offset += 2
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise InputError("non-numeric PNM header field") from None
    if width < 1 or height < 1:
        raise InputError(f"zero-dimension image ({width}x{height})")
    if maxval != 255:
        raise InputError(f"only maxval 255 is supported, got {maxval}")
    channels = 1 if magic == b"P5" else 3
    size = width * height * channels
    raster = buf[offset : offset + size]
    if len(raster) != size:
        raise InputError(f"raster truncated: expected {size} bytes, got {len(raster)}")
    arr = np.frombuffer(raster, dtype=np.uint8)
    return arr.reshape(height, width) if channels == 1 else arr.reshape(height, width, 3)


def write_pgm(path: str | os.PathLike, raster: GrayImage | PixelClassMask | np.ndarray) -> None:
    if isinstance(raster, GrayImage):
        arr = raster.data
    elif isinstance(raster, PixelClassMask):
        arr = raster.labels
    else:
        arr = np.asarray(raster, dtype=np.uint8)
    h, w = arr.shape
    Path(path).write_bytes(b"P5\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(arr, dtype=np.uint8).tobytes())


def rgb_to_gray(rgb: np.ndarray) -> np.ndarray:
    """Luma 0.299R + 0.587G + 0.114B, rounded half-up, in exact integer arithmetic."""
    rgb = np.asarray(rgb, dtype=np.int64)
    acc = 299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2]
    return np.clip((acc + 500) // 1000, 0, 255).astype(np.uint8)


def _decode_png(path: Path) -> np.ndarray:
    try:
        from PIL import Image
    except ImportError:  # pragma: no cover - optional dependency
        raise InputError("PNG support requires Pillow (pip install 'artifact[png]')") from None
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode in ("L", "RGB"):
                arr = np.asarray(im)
            elif im.mode == "RGBA":
                arr = np.asarray(im)[..., :3]
            elif im.mode in ("P", "LA", "1"):
                arr = np.asarray(im.convert("RGB"))
            else:
                raise InputError(f"unsupported PNG mode {im.mode}")
    except (OSError, SyntaxError) as exc:
        raise InputError(f"cannot decode PNG {path}: {exc}") from None
    return arr


def _decode_raster(path: str | os.PathLike) -> np.ndarray:
    path = Path(path)
    try:
        buf = path.read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    if buf[:8] == b"\x89PNG\r\n\x1a\n":
        arr = _decode_png(path)
    elif buf[:2] in (b"P5", b"P6"):
        arr = read_pgm(buf)
    else:
        raise InputError(f"unsupported image format: {path}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise InputError(f"zero-dimension image: {path}")
    return arr


def load_gray_image(path: str | os.PathLike) -> GrayImage:
    arr = _decode_raster(path)
    if arr.ndim == 3:
        arr = rgb_to_gray(arr)
    return GrayImage(arr)


def load_mask(path: str | os.PathLike, image: GrayImage) -> PixelClassMask:
    """Read a P5 mask (0 = character, 255 = background, 128 = ignore) paired with ``image``."""
    arr = _decode_raster(path)
    if arr.ndim != 2:
        raise ValidationError("mask must be single-channel")
    if arr.shape != image.shape:
        raise ValidationError(
            f"mask is {arr.shape[1]}x{arr.shape[0]} but image is {image.width}x{image.height}"
        )
    return PixelClassMask(arr)


# --- mask estimation ----------------------------------------------------------

def otsu_threshold(hist: np.ndarray) -> int:
    """Threshold ``t`` maximizing between-class variance for classes ``< t`` and ``>= t``.

    Comparisons use exact integer arithmetic, so ties resolve to the lowest
    ``t``. Raises :class:`ValidationError` when fewer than two values occur.
    """
    hist = [int(c) for c in hist]
    n = sum(hist)
    s = sum(v * c for v, c in enumerate(hist))
    best_t, best_num, best_den = None, 0, 1
    n0 = s0 = 0
    for t in range(1, 256):
        n0 += hist[t - 1]
        s0 += (t - 1) * hist[t - 1]
        n1 = n - n0
        if n0 == 0 or n1 == 0:
            continue
        # between-class variance * n^2 == (s0*n1 - s1*n0)^2 / (n0*n1)
        num = (s0 * n1 - (s - s0) * n0) ** 2
        den = n0 * n1
        if num * best_den > best_num * den:
            best_t, best_num, best_den = t, num, den
    if best_t is None:
        raise ValidationError("constant image: no threshold separates two classes")
    return best_t


def estimate_mask(image: GrayImage) -> PixelClassMask:
    """Best-effort character mask from a single global threshold.

    The smaller class becomes Character; on equal sizes the darker class
    wins. Unreliable under exactly the non-uniform lighting being audited.
    """
    hist = np.bincount(image.data.ravel(), minlength=256)
    t = otsu_threshold(hist)
    dark = image.data < t
    n_dark = int(dark.sum())
    n_light = dark.size - n_dark
    char = dark if n_dark <= n_light else ~dark
    labels = np.where(char, Label.CHARACTER, Label.BACKGROUND).astype(np.uint8)
    return PixelClassMask(labels)


# --- regions ------------------------------------------------------------------

def _merge_boxes(boxes: np.ndarray, gap: int) -> list[int]:
    """Union-find over boxes whose ``gap``-dilated extents overlap; returns a root per box."""
    n = len(boxes)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    order = np.argsort(boxes[:, 0], kind="stable").tolist()
    reach = 2 * gap
    for i_pos, i in enumerate(order):
        x0, y0, x1, y1 = boxes[i].tolist()
        for j in order[i_pos + 1 :]:
            bx0, by0, bx1, by1 = boxes[j].tolist()
            if bx0 - x1 >= reach:
                break
            if by0 - y1 < reach and y0 - by1 < reach:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    return [find(i) for i in range(n)]


def _region_from_members(members: np.ndarray, width: int, pad: int) -> CharRegion:
    ys, xs = np.divmod(members, width)
    x0, y0 = int(xs.min()), int(ys.min())
    return CharRegion((x0, y0, int(xs.max()) - x0 + 1, int(ys.max()) - y0 + 1), members, pad)


def extract_char_regions(
    mask: PixelClassMask, connectivity: int = 8, merge_gap: int = 0, pad: int = 2
) -> list[CharRegion]:
    """Connected components of Character pixels, sorted by box origin ``(y, x)``.

    With ``merge_gap > 0`` components whose boxes, each grown by
    ``merge_gap`` on every side, overlap are merged transitively.
    """
    if connectivity not in (4, 8):
        raise ValidationError(f"connectivity must be 4 or 8, got {connectivity}")
    if merge_gap < 0:
        raise ValidationError("merge_gap must be >= 0")
    fg = mask.labels == Label.CHARACTER
    if not fg.any():
        raise ValidationError("mask has no Character pixels")
    labels, n = kernels.label_components(fg, connectivity)
    flat = labels.ravel()
    idx = np.flatnonzero(flat)
    ids = flat[idx]
    if merge_gap > 0 and n > 1:
        boxes = kernels.component_boxes(labels, n)
        roots = np.asarray(_merge_boxes(boxes, merge_gap), dtype=np.int64)
        ids = roots[ids - 1] + 1
    order = np.argsort(ids, kind="stable")
    ids, idx = ids[order], idx[order]
    cuts = np.flatnonzero(np.diff(ids)) + 1
    regions = [_region_from_members(g, mask.width, pad) for g in np.split(idx, cuts)]
    regions.sort(key=lambda r: (r.box[1], r.box[0], r.box[3], r.box[2]))
    return regions


def regions_from_boxes(
    mask: PixelClassMask, boxes: Iterable[tuple[int, int, int, int]], pad: int = 2
) -> list[CharRegion]:
    """Regions from explicit boxes; members are the Character pixels inside each box."""
    out = []
    for box in boxes:
        x, y, w, h = (int(v) for v in box)
        if w < 1 or h < 1 or x < 0 or y < 0 or x + w > mask.width or y + h > mask.height:
            raise ValidationError(f"region box {box} lies outside the {mask.width}x{mask.height} image")
        sub = mask.labels[y : y + h, x : x + w] == Label.CHARACTER
        if not sub.any():
            raise ValidationError(f"region box {box} contains no Character pixels")
        ys, xs = np.nonzero(sub)
        members = (ys + y) * mask.width + (xs + x)
        out.append(CharRegion((x, y, w, h), members, pad))
    out.sort(key=lambda r: (r.box[1], r.box[0], r.box[3], r.box[2]))
    return out


def load_region_sidecar(path: str | os.PathLike) -> list[tuple[int, int, int, int]]:
    """Parse ``x y w h`` lines (single-space separated ASCII decimals)."""
    try:
        text = Path(path).read_text(encoding="ascii")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read region sidecar {path}: {exc}") from None
    boxes = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split(" ")
        if len(parts) != 4 or not all(p.isdigit() for p in parts):
            raise ValidationError(f"{path}:{lineno}: expected 'x y w h', got {line!r}")
        boxes.append(tuple(int(p) for p in parts))
    return boxes
