"""Command-line entry point: ``ocr-auditor <subcommand>``."""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .errors import InputError, ValidationError
from .illum import AuditPolicy, AuditReport, IlluminationLevel, classify_level, device_suitable, grade_required, report_to_json
from .imaging import estimate_mask, extract_char_regions, load_gray_image, load_mask, load_region_sidecar, regions_from_boxes, write_pgm
from .kb import diagnose_from_audit, load_kb, load_profile, phenomena_to_factors, plan_augmentation
from .synth import load_scene_spec, render

EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2
EXIT_LEVEL = {IlluminationLevel.I: 0, IlluminationLevel.II: 10, IlluminationLevel.III: 20}

KB_ENV = "OCR_AUDITOR_KB"

_D = AuditPolicy()
DEFAULTS_HELP = f"""\
defaults (all overridable by flags; no other configuration is read):
  --alpha         {_D.alpha:<8} trimmed-quantile fraction for class intervals, [0, 0.5)
  --min-gap       {_D.min_gap:<8} minimum gap (pixel values) counted as separated, >= 1
  --pad           {_D.pad:<8} background context margin around each region box
  --t-black       {_D.t_black:<8} values <= t-black count as clipped black
  --t-white       {_D.t_white:<8} values >= t-white count as clipped white
  --f-sat         {_D.f_sat:<8} clipped fraction that raises a saturation flag
  --connectivity  {_D.connectivity:<8} 4 or 8 neighbour connectivity for region extraction
  --merge-gap     {_D.merge_gap:<8} merge components whose grown boxes overlap
  --kb            ${KB_ENV} if set, else the bundled seed knowledge base

exit codes: analyze 0/10/20 for level I/II/III; 1 I/O error; 2 validation error
"""


def _float_in(lo, hi, lo_open=False, hi_open=False):
    def parse(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if (v < lo or (lo_open and v == lo)) or (v > hi or (hi_open and v == hi)):
            raise argparse.ArgumentTypeError(f"{v} out of range")
        return v
    return parse


def _int_in(lo, hi=None):
    def parse(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
        if v < lo or (hi is not None and v > hi):
            raise argparse.ArgumentTypeError(f"{v} out of range")
        return v
    return parse


def _add_output(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--json", dest="fmt", action="store_const", const="json", help="JSON output (default)")
    g.add_argument("--text", dest="fmt", action="store_const", const="text", help="human-readable output")
    p.set_defaults(fmt="json")
    p.add_argument("--out", type=Path, help="write the report here instead of stdout")


def _add_kb(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kb", type=Path, default=None, help=f"knowledge base file (default: ${KB_ENV} or bundled seed)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ocr-auditor",
        description="Audit document images for non-uniform illumination and look up disturbance factors.",
        epilog=DEFAULTS_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="classify illumination level I/II/III", epilog=DEFAULTS_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    a.add_argument("image", type=Path)
    a.add_argument("--mask", type=Path, help="P5 mask: 0 character, 255 background, 128 ignore")
    a.add_argument("--regions", type=Path, help="sidecar of 'x y w h' lines overriding region extraction")
    a.add_argument("--alpha", type=_float_in(0, 0.5, hi_open=True), default=_D.alpha)
    a.add_argument("--min-gap", type=_int_in(1), default=_D.min_gap)
    a.add_argument("--pad", type=_int_in(0), default=_D.pad)
    a.add_argument("--t-black", type=_int_in(0, 255), default=_D.t_black)
    a.add_argument("--t-white", type=_int_in(0, 255), default=_D.t_white)
    a.add_argument("--f-sat", type=_float_in(0, 1, lo_open=True), default=_D.f_sat)
    a.add_argument("--connectivity", type=int, choices=(4, 8), default=_D.connectivity)
    a.add_argument("--merge-gap", type=_int_in(0), default=_D.merge_gap)
    _add_output(a)

    g = sub.add_parser("grade", help="OCR grade required for an illumination level")
    g.add_argument("--level", required=True, choices=[lv.value for lv in IlluminationLevel])
    g.add_argument("--device", choices=["A", "AA", "X"], help="also check whether a device grade suffices")
    _add_output(g)

    d = sub.add_parser("diagnose", help="factors linked to observed degradation phenomena")
    d.add_argument("--phenomena", help="comma-separated phenomenon names")
    d.add_argument("--from-report", type=Path, help="analyze JSON report to derive phenomena from")
    d.add_argument("--include-extensions", action="store_true", help="also follow user-extension links")
    _add_kb(d)
    _add_output(d)

    p = sub.add_parser("plan", help="training-data augmentation axes from a usage profile")
    p.add_argument("--profile", type=Path, required=True)
    _add_kb(p)
    _add_output(p)

    s = sub.add_parser("synth", help="render a synthetic image and mask from a scene spec")
    s.add_argument("--spec", type=Path, required=True)
    s.add_argument("--out", type=Path, required=True, help="output image (P5 PGM)")
    s.add_argument("--out-mask", type=Path, required=True, help="output mask (P5 PGM)")

    k = sub.add_parser("kb-validate", help="check a knowledge base file")
    _add_kb(k)
    return parser


def _emit(args, report) -> None:
    text = report.to_json() if args.fmt == "json" else report.to_text()
    if args.out:
        try:
            args.out.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot write {args.out}: {exc.strerror or exc}") from None
    else:
        sys.stdout.write(text)


def _kb_path(args):
    if args.kb is not None:
        return args.kb
    env = os.environ.get(KB_ENV)
    return Path(env) if env else None


def cmd_analyze(args) -> int:
    policy = AuditPolicy(
        alpha=args.alpha, min_gap=args.min_gap, pad=args.pad, t_black=args.t_black,
        t_white=args.t_white, f_sat=args.f_sat, connectivity=args.connectivity, merge_gap=args.merge_gap,
    )
    image = load_gray_image(args.image)
    if args.mask is not None:
        mask, provenance = load_mask(args.mask, image), "ground_truth"
    else:
        print("warning: no --mask given; estimating one with a global threshold", file=sys.stderr)
        mask, provenance = estimate_mask(image), "estimated"
    if args.regions is not None:
        regions = regions_from_boxes(mask, load_region_sidecar(args.regions), policy.pad)
    else:
        regions = extract_char_regions(mask, policy.connectivity, policy.merge_gap, policy.pad)
    report = classify_level(image, mask, regions, policy, provenance)
    _emit(args, report)
    return EXIT_LEVEL[report.level]


class _GradeReport:
    def __init__(self, level: IlluminationLevel, device: str | None):
        self.level = level
        self.grade = grade_required(level)
        self.device = device

    def to_dict(self) -> dict:
        from .illum import guidance_for
        d = {"level": self.level.value, "required_grade": self.grade.value,
             "guidance": list(guidance_for(self.grade))}
        if self.device:
            ok, _ = device_suitable(self.device, self.level)
            d["device"] = {"grade": self.device, "suitable": ok, "guidance": list(guidance_for(self.device))}
        return d

    def to_json(self) -> str:
        return report_to_json(self.to_dict())

    def to_text(self) -> str:
        d = self.to_dict()
        out = [f"level {d['level']} requires OCR grade {d['required_grade']}"]
        out += [f"  - {g}" for g in d["guidance"]]
        if self.device:
            verdict = "suitable" if d["device"]["suitable"] else "NOT suitable"
            out.append(f"device grade {self.device}: {verdict}")
            out += [f"  - {g}" for g in d["device"]["guidance"]]
        return "\n".join(out) + "\n"


def cmd_grade(args) -> int:
    _emit(args, _GradeReport(IlluminationLevel(args.level), args.device))
    return EXIT_OK


def _split(text: str | None) -> list[str]:
    return [t.strip() for t in (text or "").split(",") if t.strip()]


def cmd_diagnose(args) -> int:
    kb = load_kb(_kb_path(args))
    names = _split(args.phenomena)
    if args.from_report is not None:
        try:
            data = json.loads(args.from_report.read_text(encoding="utf-8"))
        except OSError as exc:
            raise InputError(f"cannot read {args.from_report}: {exc.strerror or exc}") from None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{args.from_report} is not valid JSON: {exc}") from None
        report = diagnose_from_audit(kb, AuditReport.from_dict(data), names, args.include_extensions)
    elif names:
        report = phenomena_to_factors(kb, names, args.include_extensions)
    else:
        raise ValidationError("diagnose needs --phenomena or --from-report")
    _emit(args, report)
    return EXIT_OK


def cmd_plan(args) -> int:
    kb = load_kb(_kb_path(args))
    _emit(args, plan_augmentation(kb, load_profile(args.profile)))
    return EXIT_OK


def cmd_synth(args) -> int:
    image, mask = render(load_scene_spec(args.spec))
    try:
        write_pgm(args.out, image)
        write_pgm(args.out_mask, mask)
    except OSError as exc:
        raise InputError(f"cannot write output: {exc.strerror or exc}") from None
    return EXIT_OK


def cmd_kb_validate(args) -> int:
    kb = load_kb(_kb_path(args))
    print(f"ok: {len(kb)} factors")
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "grade": cmd_grade,
    "diagnose": cmd_diagnose,
    "plan": cmd_plan,
    "synth": cmd_synth,
    "kb-validate": cmd_kb_validate,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
