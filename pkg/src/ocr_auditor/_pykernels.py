"""Pure-Python/numpy versions of the compiled kernels, same signatures and outputs."""
from __future__ import annotations

import numpy as np


def _row_runs(row: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    padded = np.concatenate(([0], (row != 0).view(np.int8), [0]))
    edges = np.flatnonzero(np.diff(padded))
    return edges[0::2], edges[1::2]


def label_components(fg: np.ndarray, connectivity: int = 8) -> tuple[np.ndarray, int]:
    """Run-length union-find labeling.

    Ids are assigned in raster order of each component's first pixel, which
    is the same numbering the compiled kernel produces.
    """
    h, w = fg.shape
    reach = 1 if connectivity == 8 else 0
    parent: list[int] = []
    runs: list[tuple[int, int, int]] = []  # (y, start, stop)

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    prev: list[tuple[int, int, int]] = []  # (start, stop, run id)
    for y in range(h):
        starts, stops = _row_runs(fg[y])
        cur = []
        j = 0
        for s, e in zip(starts.tolist(), stops.tolist()):
            rid = len(runs)
            runs.append((y, s, e))
            parent.append(rid)
            # advance past previous-row runs that end too far left
            while j < len(prev) and prev[j][1] + reach <= s:
                j += 1
            k = j
            while k < len(prev) and prev[k][0] < e + reach:
                ra, rb = find(rid), find(prev[k][2])
                if ra != rb:
                    if ra < rb:
                        parent[rb] = ra
                    else:
                        parent[ra] = rb
                k += 1
            cur.append((s, e, rid))
        prev = cur

    labels = np.zeros((h, w), dtype=np.int32)
    remap: dict[int, int] = {}
    # runs are already in raster order, so first-seen root order matches
    for rid, (y, s, e) in enumerate(runs):
        root = find(rid)
        lab = remap.get(root)
        if lab is None:
            lab = remap[root] = len(remap) + 1
        labels[y, s:e] = lab
    return labels, len(remap)


def component_boxes(labels: np.ndarray, n: int) -> np.ndarray:
    boxes = np.empty((n, 4), dtype=np.int64)
    if n == 0:
        return boxes
    ys, xs = np.nonzero(labels)
    ids = labels[ys, xs] - 1
    boxes[:, 0] = labels.shape[1]
    boxes[:, 1] = labels.shape[0]
    boxes[:, 2] = 0
    boxes[:, 3] = 0
    np.minimum.at(boxes[:, 0], ids, xs)
    np.minimum.at(boxes[:, 1], ids, ys)
    np.maximum.at(boxes[:, 2], ids, xs + 1)
    np.maximum.at(boxes[:, 3], ids, ys + 1)
    return boxes


def box_histograms(image: np.ndarray, labels: np.ndarray, y0: int, y1: int, x0: int, x1: int):
    img = image[y0:y1, x0:x1]
    lab = labels[y0:y1, x0:x1]
    char = np.bincount(img[lab == 0], minlength=256).astype(np.int64)
    bg = np.bincount(img[lab == 255], minlength=256).astype(np.int64)
    return char, bg
