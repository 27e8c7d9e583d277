"""Disturbance factor knowledge base, phenomenon lookup and augmentation planning."""
from __future__ import annotations

import enum
import json
import os
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .errors import InputError, KbParseError, KbValidationError, ValidationError
from .illum import AuditReport, IlluminationLevel, report_to_json

__all__ = [
    "SCHEMA_VERSION",
    "Classification",
    "Phenomenon",
    "Provenance",
    "FactorEntry",
    "KnowledgeBase",
    "Judgment",
    "UsageProfile",
    "DiagnosisReport",
    "PlanReport",
    "seed_kb_path",
    "load_kb",
    "parse_kb",
    "serialize_kb",
    "parse_phenomena",
    "phenomena_to_factors",
    "diagnose_from_audit",
    "load_profile",
    "plan_augmentation",
]

SCHEMA_VERSION = 1
NO_PHENOMENA = "no detected phenomena"


class Classification(enum.Enum):
    ILLUMINANT = "Illuminant"
    OBSTACLE = "Obstacle"
    OBJECT = "Object"
    CAMERA_PHOTOGRAPHER = "CameraPhotographer"

    @property
    def prefix(self) -> str:
        return _PREFIX[self]

    @property
    def rank(self) -> int:
        return list(Classification).index(self)


_PREFIX = {
    Classification.ILLUMINANT: "L",
    Classification.OBSTACLE: "O",
    Classification.OBJECT: "T",
    Classification.CAMERA_PHOTOGRAPHER: "C",
}


class Phenomenon(enum.Enum):
    BLOCKED_UP_SHADOWS = "blocked_up_shadows"
    BLOWN_OUT_HIGHLIGHTS = "blown_out_highlights"
    SHADING = "shading"
    SHINY = "shiny"
    LOW_CONTRAST = "low_contrast"
    LOW_DEFINITION = "low_definition"
    FADING = "fading"
    DEFOCUS = "defocus"
    MOTION_BLUR = "motion_blur"
    TILT = "tilt"
    SHADOW_OVERLAP = "shadow_overlap"
    SHIELDING = "shielding"

    @property
    def rank(self) -> int:
        return list(Phenomenon).index(self)


class Provenance(enum.Enum):
    PAPER = "Paper"
    USER_EXTENSION = "UserExtension"
    PLACEHOLDER_UNKNOWN = "PlaceholderUnknown"


_CODE_RE = re.compile(r"^[LOTC]-[0-9]{2}$")
_EXT = "ext:"


def parse_phenomena(names: Iterable[str]) -> frozenset[Phenomenon]:
    out = set()
    for name in names:
        name = name.strip()
        if not name:
            continue
        try:
            out.add(Phenomenon(name))
        except ValueError:
            raise ValidationError(f"unknown phenomenon {name!r}") from None
    return frozenset(out)


@dataclass(frozen=True)
class FactorEntry:
    code: str
    classification: Classification
    description: str
    phenomena: frozenset[Phenomenon] = frozenset()
    provenance: Provenance = Provenance.PAPER
    hint: str = ""
    extension_phenomena: frozenset[Phenomenon] = frozenset()

    def __post_init__(self):
        if not _CODE_RE.match(self.code):
            raise KbValidationError(f"malformed factor code {self.code!r}", self.code)
        if self.code[0] != self.classification.prefix:
            raise KbValidationError(
                f"{self.code}: prefix does not match classification {self.classification.value}", self.code
            )

    @property
    def sort_key(self) -> tuple[int, str]:
        return self.classification.rank, self.code

    def linked(self, include_extensions: bool = False) -> frozenset[Phenomenon]:
        return self.phenomena | self.extension_phenomena if include_extensions else self.phenomena


@dataclass(frozen=True)
class KnowledgeBase:
    entries: tuple[FactorEntry, ...]
    _index: Mapping[str, FactorEntry] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index: dict[str, FactorEntry] = {}
        for e in self.entries:
            if e.code in index:
                raise KbValidationError(f"duplicate factor code {e.code}", e.code)
            index[e.code] = e
        object.__setattr__(self, "entries", tuple(sorted(self.entries, key=lambda e: e.sort_key)))
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, code: str) -> bool:
        return code in self._index

    def __getitem__(self, code: str) -> FactorEntry:
        return self._index[code]

    def codes(self) -> list[str]:
        return [e.code for e in self.entries]


# --- file format --------------------------------------------------------------

def seed_kb_path() -> Path:
    return Path(str(resources.files("ocr_auditor").joinpath("data/seed_kb.tsv")))


def _parse_phenomena_field(raw: str, lineno: int, source: str, code: str):
    paper, ext = set(), set()
    if raw == "-":
        return frozenset(), frozenset()
    for item in raw.split(";"):
        target = paper
        if item.startswith(_EXT):
            target, item = ext, item[len(_EXT):]
        try:
            target.add(Phenomenon(item))
        except ValueError:
            raise KbValidationError(f"{source}:{lineno}: {code}: unknown phenomenon {item!r}", code) from None
    return frozenset(paper), frozenset(ext)


def parse_kb(text: str, source: str = "<kb>") -> KnowledgeBase:
    entries = []
    seen: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        if line.startswith("#"):
            m = re.match(r"#\s*schema:\s*(\S+)\s*$", line)
            if m and m.group(1) != str(SCHEMA_VERSION):
                raise KbParseError(f"unsupported schema version {m.group(1)}", lineno, source)
            continue
        cols = line.rstrip("\r\n").split("\t")
        if len(cols) not in (5, 6):
            raise KbParseError(f"expected 5 or 6 tab-separated fields, got {len(cols)}", lineno, source)
        code, cls, desc, phen, prov = cols[:5]
        hint = cols[5] if len(cols) == 6 else ""
        if not _CODE_RE.match(code):
            raise KbParseError(f"malformed factor code {code!r}", lineno, source)
        if code in seen:
            raise KbValidationError(f"duplicate factor code {code} (lines {seen[code]} and {lineno})", code)
        seen[code] = lineno
        try:
            classification = Classification(cls)
        except ValueError:
            raise KbParseError(f"{code}: unknown classification {cls!r}", lineno, source) from None
        try:
            provenance = Provenance(prov)
        except ValueError:
            raise KbParseError(f"{code}: unknown provenance {prov!r}", lineno, source) from None
        if not desc.strip():
            raise KbParseError(f"{code}: empty description", lineno, source)
        paper, ext = _parse_phenomena_field(phen, lineno, source, code)
        entries.append(FactorEntry(code, classification, desc, paper, provenance, hint, ext))
    return KnowledgeBase(tuple(entries))


def load_kb(path: str | os.PathLike | None = None) -> KnowledgeBase:
    """Load and validate a KB file; ``None`` loads the bundled seed."""
    path = Path(path) if path is not None else seed_kb_path()
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read knowledge base {path}: {exc}") from None
    return parse_kb(text, str(path))


def serialize_kb(kb: KnowledgeBase) -> str:
    lines = [f"# schema: {SCHEMA_VERSION}"]
    for e in kb.entries:
        items = sorted(p.value for p in e.phenomena) + sorted(_EXT + p.value for p in e.extension_phenomena)
        cols = [e.code, e.classification.value, e.description, ";".join(items) or "-", e.provenance.value]
        if e.hint:
            cols.append(e.hint)
        lines.append("\t".join(cols))
    return "\n".join(lines) + "\n"


# --- diagnosis ----------------------------------------------------------------

def _factor_dict(e: FactorEntry, include_extensions: bool) -> dict:
    d = {
        "code": e.code,
        "classification": e.classification.value,
        "description": e.description,
        "phenomena": sorted(p.value for p in e.linked(include_extensions)),
        "provenance": e.provenance.value,
    }
    if e.hint:
        d["hint"] = e.hint
    return d


@dataclass(frozen=True)
class DiagnosisReport:
    phenomena: tuple[Phenomenon, ...]
    listing: tuple[tuple[Classification, tuple[tuple[Phenomenon, tuple[str, ...]], ...]], ...]
    factors: tuple[FactorEntry, ...]
    include_extensions: bool = False

    @property
    def codes(self) -> list[str]:
        return [f.code for f in self.factors]

    @property
    def empty(self) -> bool:
        return not self.phenomena

    def codes_for(self, classification: Classification, phenomenon: Phenomenon) -> tuple[str, ...]:
        for cls, rows in self.listing:
            if cls is classification:
                return dict(rows).get(phenomenon, ())
        return ()

    def to_dict(self) -> dict:
        return {
            "status": NO_PHENOMENA if self.empty else "ok",
            "phenomena": [p.value for p in self.phenomena],
            "listing": [
                {
                    "classification": cls.value,
                    "phenomena": [{"phenomenon": p.value, "codes": list(codes)} for p, codes in rows],
                }
                for cls, rows in self.listing
            ],
            "factors": [_factor_dict(f, self.include_extensions) for f in self.factors],
            "remediation": [{"code": f.code, "hint": f.hint} for f in self.factors if f.hint],
            "include_extensions": self.include_extensions,
        }

    def to_json(self) -> str:
        return report_to_json(self.to_dict())

    def to_text(self) -> str:
        if self.empty:
            return NO_PHENOMENA + "\n"
        out = ["phenomena: " + ", ".join(p.value for p in self.phenomena), ""]
        for cls, rows in self.listing:
            out.append(cls.value)
            for p, codes in rows:
                out.append(f"  * {p.value}: {', '.join(codes)}")
        out += ["", "factors to recheck:"]
        for f in self.factors:
            out.append(f"  {f.code}  {f.description}")
            if f.hint:
                out.append(f"        hint: {f.hint}")
        return "\n".join(out) + "\n"


def _empty_listing():
    return tuple((cls, ()) for cls in Classification)


def phenomena_to_factors(
    kb: KnowledgeBase, phenomena: Iterable[Phenomenon | str], include_extensions: bool = False
) -> DiagnosisReport:
    """All factors linked to any requested phenomenon, grouped by classification."""
    wanted = parse_phenomena(p.value if isinstance(p, Phenomenon) else p for p in phenomena)
    if not wanted:
        raise ValidationError("at least one phenomenon is required")
    ordered = tuple(sorted(wanted, key=lambda p: p.rank))
    listing = []
    hit: set[str] = set()
    for cls in Classification:
        rows = []
        for p in ordered:
            codes = tuple(e.code for e in kb.entries
                          if e.classification is cls and p in e.linked(include_extensions))
            if codes:
                rows.append((p, codes))
                hit.update(codes)
        listing.append((cls, tuple(rows)))
    factors = tuple(e for e in kb.entries if e.code in hit)
    return DiagnosisReport(ordered, tuple(listing), factors, include_extensions)


def audit_phenomena(report: AuditReport) -> frozenset[Phenomenon]:
    """Phenomena observable from an audit: shading, blown-out and blocked-up clipping."""
    found = set()
    if report.level is IlluminationLevel.I:
        return frozenset()
    found.add(Phenomenon.SHADING)
    failing = set(map(tuple, report.failing_regions))
    for r in report.region_results:
        if tuple(r.box) not in failing:
            continue
        if r.saturation.blown_out:
            found.add(Phenomenon.BLOWN_OUT_HIGHLIGHTS)
        if r.saturation.blocked_up:
            found.add(Phenomenon.BLOCKED_UP_SHADOWS)
    return frozenset(found)


def diagnose_from_audit(
    kb: KnowledgeBase,
    report: AuditReport,
    extra: Iterable[Phenomenon | str] = (),
    include_extensions: bool = False,
) -> DiagnosisReport:
    """Diagnose from an audit; ``extra`` carries manually observed phenomena (shiny, tilt, ...)."""
    found = set(audit_phenomena(report))
    found |= parse_phenomena(p.value if isinstance(p, Phenomenon) else p for p in extra)
    if not found:
        return DiagnosisReport((), _empty_listing(), (), include_extensions)
    return phenomena_to_factors(kb, found, include_extensions)


# --- augmentation planning ----------------------------------------------------

@dataclass(frozen=True)
class Judgment:
    match: bool
    note: str = ""


@dataclass(frozen=True)
class UsageProfile:
    conditions: tuple[str, ...] = ()
    judgments: Mapping[str, Judgment] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "UsageProfile":
        if not isinstance(d, dict):
            raise ValidationError("usage profile must be a JSON object")
        conditions = d.get("conditions", [])
        judgments = d.get("judgments", {})
        if not isinstance(conditions, list) or not all(isinstance(c, str) for c in conditions):
            raise ValidationError("'conditions' must be a list of strings")
        if not isinstance(judgments, dict):
            raise ValidationError("'judgments' must be an object keyed by factor code")
        parsed = {}
        for code, j in judgments.items():
            if not isinstance(j, dict) or not isinstance(j.get("match"), bool):
                raise ValidationError(f"judgment for {code} needs a boolean 'match'")
            note = j.get("note", "")
            if not isinstance(note, str):
                raise ValidationError(f"judgment note for {code} must be a string")
            parsed[code] = Judgment(j["match"], note)
        return cls(tuple(conditions), parsed)

    def to_dict(self) -> dict:
        return {
            "conditions": list(self.conditions),
            "judgments": {c: {"match": j.match, "note": j.note} for c, j in sorted(self.judgments.items())},
        }


def load_profile(path: str | os.PathLike) -> UsageProfile:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read usage profile {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"usage profile {path} is not valid JSON: {exc}") from None
    return UsageProfile.from_dict(data)


@dataclass(frozen=True)
class PlanReport:
    conditions: tuple[str, ...]
    plan: tuple[tuple[FactorEntry, str], ...]
    not_applicable: tuple[tuple[FactorEntry, str], ...]
    unreviewed: tuple[FactorEntry, ...]

    @property
    def axes(self) -> list[str]:
        return [e.code for e, _ in self.plan]

    def to_dict(self) -> dict:
        def row(e, note):
            return {"code": e.code, "classification": e.classification.value,
                    "description": e.description, "note": note}

        return {
            "conditions": list(self.conditions),
            "plan": [row(e, n) for e, n in self.plan],
            "not_applicable": [row(e, n) for e, n in self.not_applicable],
            "unreviewed": [e.code for e in self.unreviewed],
        }

    def to_json(self) -> str:
        return report_to_json(self.to_dict())

    def to_text(self) -> str:
        out = ["usage conditions:"] + [f"  - {c}" for c in self.conditions]
        out.append("training-data variation axes:")
        out += [f"  {e.code}  {e.description}" + (f"  ({n})" if n else "") for e, n in self.plan] or ["  (none)"]
        out.append(f"not applicable: {', '.join(e.code for e, _ in self.not_applicable) or '-'}")
        out.append(f"unreviewed: {', '.join(e.code for e in self.unreviewed) or '-'}")
        return "\n".join(out) + "\n"


def plan_augmentation(kb: KnowledgeBase, profile: UsageProfile) -> PlanReport:
    """Matched factors become augmentation axes; mismatched and unjudged codes are listed apart."""
    unknown = sorted(c for c in profile.judgments if c not in kb)
    if unknown:
        raise ValidationError(f"judgment on unknown factor code(s): {', '.join(unknown)}")
    plan, skip, unreviewed = [], [], []
    for e in kb.entries:
        j = profile.judgments.get(e.code)
        if j is None:
            unreviewed.append(e)
        elif j.match:
            plan.append((e, j.note))
        else:
            skip.append((e, j.note))
    return PlanReport(profile.conditions, tuple(plan), tuple(skip), tuple(unreviewed))
