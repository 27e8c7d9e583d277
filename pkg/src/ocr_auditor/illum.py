"""Histogram separation, saturation checks and illumination level classification."""
from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache, total_ordering
from importlib import resources
from typing import Sequence

import numpy as np

from . import kernels
from .errors import ValidationError
from .imaging import CharRegion, GrayImage, Label, PixelClassMask

__all__ = [
    "PixelClass",
    "Scope",
    "Histogram",
    "SeparationPolicy",
    "SeparationResult",
    "SaturationFlags",
    "AuditPolicy",
    "IlluminationLevel",
    "OcrGrade",
    "RegionResult",
    "AuditReport",
    "compute_histogram",
    "trimmed_interval",
    "check_separation",
    "detect_saturation",
    "classify_level",
    "grade_required",
    "device_suitable",
    "report_to_json",
]


class PixelClass(enum.Enum):
    CHARACTER = "character"
    BACKGROUND = "background"

    @property
    def label(self) -> Label:
        return Label.CHARACTER if self is PixelClass.CHARACTER else Label.BACKGROUND


@dataclass(frozen=True)
class Scope:
    """``box=None`` means the whole image; otherwise ``(x, y, w, h)``."""

    box: tuple[int, int, int, int] | None = None

    @classmethod
    def region(cls, box) -> "Scope":
        return cls(tuple(int(v) for v in box))

    @property
    def is_global(self) -> bool:
        return self.box is None


GLOBAL = Scope()


@dataclass(frozen=True, eq=False)
class Histogram:
    bins: np.ndarray
    pixel_class: PixelClass
    scope: Scope = GLOBAL

    def __post_init__(self):
        bins = np.array(self.bins, dtype=np.int64, copy=True)
        if bins.shape != (256,):
            raise ValidationError("histogram needs exactly 256 bins")
        if (bins < 0).any():
            raise ValidationError("histogram counts must be >= 0")
        bins.setflags(write=False)
        object.__setattr__(self, "bins", bins)

    @property
    def total(self) -> int:
        return int(self.bins.sum())

    def __eq__(self, other):
        if not isinstance(other, Histogram):
            return NotImplemented
        return (
            self.pixel_class == other.pixel_class
            and self.scope == other.scope
            and bool(np.array_equal(self.bins, other.bins))
        )

    __hash__ = None


@dataclass(frozen=True)
class SeparationPolicy:
    alpha: float = 0.005
    min_gap: int = 1

    def __post_init__(self):
        if not (0 <= self.alpha < 0.5) or math.isnan(self.alpha):
            raise ValidationError(f"alpha must lie in [0, 0.5), got {self.alpha}")
        if int(self.min_gap) != self.min_gap or self.min_gap < 1:
            raise ValidationError(f"min_gap must be an integer >= 1, got {self.min_gap}")


@dataclass(frozen=True)
class SeparationResult:
    separated: bool
    char_interval: tuple[int, int]
    bg_interval: tuple[int, int]
    gap: int

    def to_dict(self) -> dict:
        return {
            "separated": self.separated,
            "char_interval": list(self.char_interval),
            "bg_interval": list(self.bg_interval),
            "gap": self.gap,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SeparationResult":
        return cls(bool(d["separated"]), tuple(d["char_interval"]), tuple(d["bg_interval"]), int(d["gap"]))


@dataclass(frozen=True)
class SaturationFlags:
    blown_out: bool
    blocked_up: bool
    white_fraction: float
    black_fraction: float

    def to_dict(self) -> dict:
        return {
            "blown_out": self.blown_out,
            "blocked_up": self.blocked_up,
            "white_fraction": round(self.white_fraction, 6),
            "black_fraction": round(self.black_fraction, 6),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SaturationFlags":
        return cls(bool(d["blown_out"]), bool(d["blocked_up"]), float(d["white_fraction"]), float(d["black_fraction"]))


@dataclass(frozen=True)
class AuditPolicy:
    """Every tunable of an audit; echoed verbatim into the report."""

    alpha: float = 0.005
    min_gap: int = 1
    pad: int = 2
    t_black: int = 2
    t_white: int = 253
    f_sat: float = 0.10
    connectivity: int = 8
    merge_gap: int = 0

    def __post_init__(self):
        self.separation  # validates alpha/min_gap
        if self.pad < 0:
            raise ValidationError("pad must be >= 0")
        if not (0 <= self.t_black <= 255 and 0 <= self.t_white <= 255):
            raise ValidationError("t_black and t_white must lie in [0, 255]")
        if not (0 < self.f_sat <= 1):
            raise ValidationError("f_sat must lie in (0, 1]")
        if self.connectivity not in (4, 8):
            raise ValidationError("connectivity must be 4 or 8")
        if self.merge_gap < 0:
            raise ValidationError("merge_gap must be >= 0")

    @property
    def separation(self) -> SeparationPolicy:
        return SeparationPolicy(self.alpha, self.min_gap)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["alpha"] = round(self.alpha, 6)
        d["f_sat"] = round(self.f_sat, 6)
        return d


@total_ordering
class _Ordered(enum.Enum):
    def __lt__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        members = list(type(self))
        return members.index(self) < members.index(other)

    def __str__(self):
        return self.value


class IlluminationLevel(_Ordered):
    I = "I"
    II = "II"
    III = "III"


class OcrGrade(_Ordered):
    A = "A"
    AA = "AA"
    X = "X"


_GRADE_FOR_LEVEL = {
    IlluminationLevel.I: OcrGrade.A,
    IlluminationLevel.II: OcrGrade.AA,
    IlluminationLevel.III: OcrGrade.X,
}


def grade_required(level: IlluminationLevel) -> OcrGrade:
    return _GRADE_FOR_LEVEL[IlluminationLevel(level)]


@lru_cache(maxsize=1)
def _guidance() -> dict[str, tuple[str, ...]]:
    text = resources.files("ocr_auditor").joinpath("data/guidance.json").read_text(encoding="utf-8")
    return {k: tuple(v) for k, v in json.loads(text).items()}


def guidance_for(grade: OcrGrade) -> tuple[str, ...]:
    return _guidance()[OcrGrade(grade).value]


def device_suitable(device: OcrGrade, level: IlluminationLevel) -> tuple[bool, str]:
    """Whether a device of grade ``device`` copes with ``level``, plus its usage guidance."""
    device = OcrGrade(device)
    return device >= grade_required(level), "\n".join(guidance_for(device))


# --- histograms and separation ------------------------------------------------

def _check_box(box, width: int, height: int) -> tuple[int, int, int, int]:
    x, y, w, h = (int(v) for v in box)
    if w < 0 or h < 0 or x < 0 or y < 0 or x + w > width or y + h > height:
        raise ValidationError(f"scope box {tuple(box)} lies outside the {width}x{height} image")
    return x, y, w, h


def _check_pair(image: GrayImage, mask: PixelClassMask) -> None:
    if image.shape != mask.shape:
        raise ValidationError(f"mask shape {mask.shape} does not match image shape {image.shape}")


def compute_histogram(
    image: GrayImage, mask: PixelClassMask, pixel_class: PixelClass, scope: Scope = GLOBAL
) -> Histogram:
    _check_pair(image, mask)
    pixel_class = PixelClass(pixel_class)
    if scope.is_global:
        x, y, w, h = 0, 0, image.width, image.height
    else:
        x, y, w, h = _check_box(scope.box, image.width, image.height)
    char, bg = kernels.box_histograms(image.data, mask.labels, y, y + h, x, x + w)
    return Histogram(char if pixel_class is PixelClass.CHARACTER else bg, pixel_class, scope)


@lru_cache(maxsize=64)
def _alpha_fraction(alpha: float) -> Fraction:
    # decimal-exact alpha so that e.g. 0.29 * 100 trims 29, not 28
    return Fraction(repr(float(alpha)))


def _trim_count(alpha: float, total: int) -> int:
    return math.floor(_alpha_fraction(alpha) * total)


def trimmed_interval(h: Histogram, alpha: float) -> tuple[int, int]:
    """Values at ranks ``k+1`` and ``total-k`` (1-based), ``k = floor(alpha*total)``."""
    if not 0 <= alpha < 0.5:
        raise ValidationError(f"alpha must lie in [0, 0.5), got {alpha}")
    total = h.total
    if total < 1:
        raise ValidationError(f"empty {h.pixel_class.value} histogram")
    k = _trim_count(alpha, total)
    cum = np.cumsum(h.bins)
    lo = int(np.searchsorted(cum, k + 1))
    hi = int(np.searchsorted(cum, total - k))
    return lo, hi


def check_separation(h_char: Histogram, h_bg: Histogram, policy: SeparationPolicy = SeparationPolicy()) -> SeparationResult:
    c_lo, c_hi = trimmed_interval(h_char, policy.alpha)
    b_lo, b_hi = trimmed_interval(h_bg, policy.alpha)
    gap = max(b_lo - c_hi, c_lo - b_hi)
    return SeparationResult(gap >= policy.min_gap, (c_lo, c_hi), (b_lo, b_hi), int(gap))


def _saturation(char_box: np.ndarray, bg_box: np.ndarray, sep: SeparationResult,
                t_black: int, t_white: int, f_sat: float) -> SaturationFlags:
    both = char_box + bg_box
    n = int(both.sum())
    if n == 0:
        raise ValidationError("region has no non-Ignore pixels")
    white = int(both[t_white:].sum()) / n
    black = int(both[: t_black + 1].sum()) / n
    failed = not sep.separated
    return SaturationFlags(failed and white >= f_sat, failed and black >= f_sat, white, black)


@dataclass(frozen=True)
class _RegionEval:
    separation: SeparationResult
    saturation: SaturationFlags
    padded_box: tuple[int, int, int, int]
    bg_source: str


def _evaluate_region(image: GrayImage, mask: PixelClassMask, region: CharRegion,
                     policy: AuditPolicy, global_bg: Histogram | None = None) -> _RegionEval:
    x, y, w, h = _check_box(region.box, image.width, image.height)
    if region.members.size == 0:
        raise ValidationError(f"region {region.box} has no Character pixels")
    px0, py0 = max(0, x - policy.pad), max(0, y - policy.pad)
    px1, py1 = min(image.width, x + w + policy.pad), min(image.height, y + h + policy.pad)
    px, py, pw, ph = px0, py0, px1 - px0, py1 - py0
    char_box, bg_box = kernels.box_histograms(image.data, mask.labels, py, py + ph, px, px + pw)
    char_hist = Histogram(np.bincount(image.data.ravel()[region.members], minlength=256),
                          PixelClass.CHARACTER, Scope.region(region.box))
    if bg_box.sum() > 0:
        bg_hist, source = Histogram(bg_box, PixelClass.BACKGROUND, Scope.region((px, py, pw, ph))), "region"
    else:
        if global_bg is None:
            global_bg = compute_histogram(image, mask, PixelClass.BACKGROUND)
        bg_hist, source = global_bg, "global"
    sep = check_separation(char_hist, bg_hist, policy.separation)
    sat = _saturation(char_box, bg_box, sep, policy.t_black, policy.t_white, policy.f_sat)
    return _RegionEval(sep, sat, (px, py, pw, ph), source)


def detect_saturation(image: GrayImage, mask: PixelClassMask, region: CharRegion,
                      t_black: int = 2, t_white: int = 253, f_sat: float = 0.10,
                      policy: SeparationPolicy = SeparationPolicy()) -> SaturationFlags:
    """Clipping fractions over the padded region; a flag fires only if separation also fails."""
    _check_pair(image, mask)
    audit = AuditPolicy(alpha=policy.alpha, min_gap=policy.min_gap, pad=region.pad,
                        t_black=t_black, t_white=t_white, f_sat=f_sat)
    return _evaluate_region(image, mask, region, audit).saturation


# --- classification -----------------------------------------------------------

@dataclass(frozen=True)
class RegionResult:
    box: tuple[int, int, int, int]
    padded_box: tuple[int, int, int, int]
    separation: SeparationResult
    saturation: SaturationFlags
    bg_source: str = "region"

    @property
    def failed(self) -> bool:
        return not self.separation.separated or self.saturation.blown_out or self.saturation.blocked_up

    def to_dict(self) -> dict:
        return {
            "box": list(self.box),
            "padded_box": list(self.padded_box),
            "separation": self.separation.to_dict(),
            "saturation": self.saturation.to_dict(),
            "bg_source": self.bg_source,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegionResult":
        return cls(tuple(d["box"]), tuple(d["padded_box"]), SeparationResult.from_dict(d["separation"]),
                   SaturationFlags.from_dict(d["saturation"]), d.get("bg_source", "region"))


@dataclass(frozen=True)
class AuditReport:
    level: IlluminationLevel
    required_grade: OcrGrade
    global_separation: SeparationResult
    region_results: tuple[RegionResult, ...]
    failing_regions: tuple[tuple[int, int, int, int], ...]
    mask_provenance: str = "ground_truth"
    policy: AuditPolicy = field(default_factory=AuditPolicy)

    def to_dict(self) -> dict:
        return {
            "level": self.level.value,
            "required_grade": self.required_grade.value,
            "global": self.global_separation.to_dict(),
            "regions": [r.to_dict() for r in self.region_results],
            "failing_regions": [list(b) for b in self.failing_regions],
            "mask_provenance": self.mask_provenance,
            "policy": self.policy.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AuditReport":
        try:
            return cls(
                IlluminationLevel(d["level"]),
                OcrGrade(d["required_grade"]),
                SeparationResult.from_dict(d["global"]),
                tuple(RegionResult.from_dict(r) for r in d["regions"]),
                tuple(tuple(b) for b in d["failing_regions"]),
                d["mask_provenance"],
                AuditPolicy(**d["policy"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed audit report: {exc}") from None

    def to_json(self) -> str:
        return report_to_json(self.to_dict())

    def to_text(self) -> str:
        lines = []
        if self.mask_provenance == "estimated":
            lines.append("WARNING: estimated mask (global threshold); results are best-effort")
        g = self.global_separation
        lines += [
            f"level: {self.level.value}",
            f"required OCR grade: {self.required_grade.value}",
            f"global: {'separated' if g.separated else 'overlapping'} "
            f"(char {list(g.char_interval)}, background {list(g.bg_interval)}, gap {g.gap})",
            f"regions: {len(self.region_results)}, failing: {len(self.failing_regions)}",
        ]
        for r in self.region_results:
            if tuple(r.box) not in set(self.failing_regions):
                continue
            flags = [n for n, on in (("blown-out", r.saturation.blown_out), ("blocked-up", r.saturation.blocked_up)) if on]
            lines.append(
                f"  fail {list(r.box)} gap {r.separation.gap}"
                + (f" [{', '.join(flags)}]" if flags else "")
                + (" (global background context)" if r.bg_source == "global" else "")
            )
        lines.append("policy: " + " ".join(f"{k}={v}" for k, v in self.policy.to_dict().items()))
        lines.append(f"mask: {self.mask_provenance}")
        return "\n".join(lines) + "\n"


def report_to_json(payload: dict) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def classify_level(
    image: GrayImage,
    mask: PixelClassMask,
    regions: Sequence[CharRegion] | None,
    policy: AuditPolicy = AuditPolicy(),
    mask_provenance: str = "ground_truth",
) -> AuditReport:
    """Level I if the whole-image classes separate, else II if every region separates, else III."""
    _check_pair(image, mask)
    if mask.count(Label.CHARACTER) == 0:
        raise ValidationError("mask has no Character pixels")
    if mask.count(Label.BACKGROUND) == 0:
        raise ValidationError("mask has no Background pixels")
    h_char = compute_histogram(image, mask, PixelClass.CHARACTER)
    h_bg = compute_histogram(image, mask, PixelClass.BACKGROUND)
    glob = check_separation(h_char, h_bg, policy.separation)

    regions = sorted(regions or (), key=lambda r: (r.box[1], r.box[0], r.box[3], r.box[2]))
    if not glob.separated and not regions:
        raise ValidationError("whole-image classes overlap and no character regions were supplied")

    results = []
    for region in regions:
        ev = _evaluate_region(image, mask, region, policy, h_bg)
        results.append(RegionResult(region.box, ev.padded_box, ev.separation, ev.saturation, ev.bg_source))

    if glob.separated:
        level, failing = IlluminationLevel.I, ()
    else:
        failing = tuple(r.box for r in results if r.failed)
        level = IlluminationLevel.III if failing else IlluminationLevel.II
    return AuditReport(level, grade_required(level), glob, tuple(results), failing, mask_provenance, policy)
