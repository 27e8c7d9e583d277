"""Illumination non-uniformity audit for document images.

Classifies document images into illumination levels I/II/III from the
character and background pixel distributions, maps levels to OCR grades,
and runs factor-table lookups for diagnosis and augmentation planning.
"""
__version__ = "0.1.0"

from .errors import AuditorError, InputError, ValidationError  # noqa: E402
from .illum import (  # noqa: E402
    AuditPolicy,
    AuditReport,
    IlluminationLevel,
    OcrGrade,
    SeparationPolicy,
    check_separation,
    classify_level,
    compute_histogram,
    detect_saturation,
    device_suitable,
    grade_required,
    trimmed_interval,
)
from .imaging import (  # noqa: E402
    CharRegion,
    GrayImage,
    Label,
    PixelClassMask,
    estimate_mask,
    extract_char_regions,
    load_gray_image,
    load_mask,
)
from .kb import diagnose_from_audit, load_kb, phenomena_to_factors, plan_augmentation  # noqa: E402
from .synth import SceneSpec, render  # noqa: E402
