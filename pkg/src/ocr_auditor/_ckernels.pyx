# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: connected-component labeling and box histograms."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int32_t i32
ctypedef cnp.int64_t i64


cdef inline i32 _find(i32[::1] parent, i32 a) noexcept nogil:
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


cdef inline i32 _join(i32[::1] parent, i32 a, i32 b) noexcept nogil:
    cdef i32 ra = _find(parent, a)
    cdef i32 rb = _find(parent, b)
    if ra < rb:
        parent[rb] = ra
        return ra
    parent[ra] = rb
    return rb


def label_components(const unsigned char[:, ::1] fg, int connectivity=8):
    """Label nonzero pixels of ``fg``; ids follow raster order of each component's first pixel."""
    cdef Py_ssize_t h = fg.shape[0], w = fg.shape[1]
    cdef Py_ssize_t y, x
    labels_arr = np.zeros((h, w), dtype=np.int32)
    cdef i32[:, ::1] lab = labels_arr
    parent_arr = np.zeros(h * w + 1, dtype=np.int32)
    cdef i32[::1] parent = parent_arr
    cdef i32 nxt = 1, m, l, n = 0
    cdef bint diag = connectivity == 8

    with nogil:
        for y in range(h):
            for x in range(w):
                if fg[y, x] == 0:
                    continue
                m = 0
                if x > 0 and lab[y, x - 1] > 0:
                    m = _find(parent, lab[y, x - 1])
                if y > 0:
                    l = lab[y - 1, x]
                    if l > 0:
                        m = _find(parent, l) if m == 0 else _join(parent, m, l)
                    if diag:
                        if x > 0:
                            l = lab[y - 1, x - 1]
                            if l > 0:
                                m = _find(parent, l) if m == 0 else _join(parent, m, l)
                        if x + 1 < w:
                            l = lab[y - 1, x + 1]
                            if l > 0:
                                m = _find(parent, l) if m == 0 else _join(parent, m, l)
                if m == 0:
                    parent[nxt] = nxt
                    lab[y, x] = nxt
                    nxt += 1
                else:
                    lab[y, x] = m

    remap_arr = np.zeros(nxt, dtype=np.int32)
    cdef i32[::1] remap = remap_arr
    with nogil:
        for y in range(h):
            for x in range(w):
                l = lab[y, x]
                if l == 0:
                    continue
                l = _find(parent, l)
                if remap[l] == 0:
                    n += 1
                    remap[l] = n
                lab[y, x] = remap[l]
    return labels_arr, int(n)


def component_boxes(const i32[:, ::1] labels, int n):
    """Half-open boxes ``(x0, y0, x1, y1)`` per label id 1..n, as an (n, 4) int64 array."""
    cdef Py_ssize_t h = labels.shape[0], w = labels.shape[1]
    cdef Py_ssize_t y, x
    cdef i32 l
    boxes_arr = np.empty((n, 4), dtype=np.int64)
    cdef i64[:, ::1] b = boxes_arr
    for l in range(n):
        b[l, 0] = w
        b[l, 1] = h
        b[l, 2] = 0
        b[l, 3] = 0
    with nogil:
        for y in range(h):
            for x in range(w):
                l = labels[y, x] - 1
                if l < 0:
                    continue
                if x < b[l, 0]:
                    b[l, 0] = x
                if y < b[l, 1]:
                    b[l, 1] = y
                if x + 1 > b[l, 2]:
                    b[l, 2] = x + 1
                if y + 1 > b[l, 3]:
                    b[l, 3] = y + 1
    return boxes_arr


def box_histograms(const unsigned char[:, ::1] image, const unsigned char[:, ::1] labels,
                   Py_ssize_t y0, Py_ssize_t y1, Py_ssize_t x0, Py_ssize_t x1):
    """Character (label 0) and background (label 255) histograms inside a half-open box."""
    char_arr = np.zeros(256, dtype=np.int64)
    bg_arr = np.zeros(256, dtype=np.int64)
    cdef i64[::1] ch = char_arr
    cdef i64[::1] bg = bg_arr
    cdef Py_ssize_t y, x
    cdef unsigned char c
    with nogil:
        for y in range(y0, y1):
            for x in range(x0, x1):
                c = labels[y, x]
                if c == 0:
                    ch[image[y, x]] += 1
                elif c == 255:
                    bg[image[y, x]] += 1
    return char_arr, bg_arr
