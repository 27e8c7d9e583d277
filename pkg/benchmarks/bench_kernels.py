"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--size 1000] [--repeat 5]

Times connected-component labeling on a dense random mask and on a
synthetic text page, per-region box histograms, and a full audit.
"""
from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from ocr_auditor import kernels
from ocr_auditor.illum import AuditPolicy, classify_level
from ocr_auditor.imaging import extract_char_regions
from ocr_auditor.synth import Glyph, LinearGradient, SceneSpec, render


def page(size: int):
    glyphs = [
        Glyph((r * 7 + c) % 10, 20 + 12 * c, 40 + 23 * r, 2)
        for r in range((size - 60) // 23)
        for c in range((size - 40) // 12)
    ]
    return render(SceneSpec(size, size, 220, 90, glyphs, [LinearGradient(0.35, 1.0, "x")]))


def best(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times), statistics.median(times)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--size", type=int, default=1000, help="square canvas side in pixels")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    dense = (rng.random((args.size, args.size)) < 0.45).astype(np.uint8)
    image, mask = page(args.size)
    fg = (mask.labels == 0).astype(np.uint8)
    regions = extract_char_regions(mask)
    boxes = [r.padded_box(image.width, image.height) for r in regions]

    def histograms():
        for x, y, w, h in boxes:
            kernels.box_histograms(image.data, mask.labels, y, y + h, x, x + w)

    cases = {
        "label dense 45% mask": lambda: kernels.label_components(dense, 8),
        "label text page": lambda: kernels.label_components(fg, 8),
        f"box histograms x{len(boxes)}": histograms,
        "full audit": lambda: classify_level(image, mask, extract_char_regions(mask), AuditPolicy()),
    }
    names = sorted(kernels.BACKENDS)
    print(f"{args.size}x{args.size}, best/median of {args.repeat} (ms)")
    print(f"{'case':<28}" + "".join(f"{n:>22}" for n in names) + ("     speedup" if len(names) == 2 else ""))
    for label, fn in cases.items():
        row = {}
        for name in names:
            with kernels.using(name):
                row[name] = best(fn, args.repeat)
        cells = "".join(f"{row[n][0] * 1e3:>12.1f} / {row[n][1] * 1e3:>7.1f}" for n in names)
        speed = f"{row['python'][0] / row['cython'][0]:>11.1f}x" if len(names) == 2 else ""
        print(f"{label:<28}{cells}{speed}")


if __name__ == "__main__":
    main()
