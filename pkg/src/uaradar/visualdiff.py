"""Contour-based visual comparison of screenshots.

A screenshot is binarized (Rec.601 luma, Otsu threshold, darker class as
foreground), its borders are traced with the Suzuki-Abe following
algorithm, and the contours are folded into a scalar profile: count,
area-weighted mean contour area, rect-weighted mean bounding-rect area,
and their geometric mean.  Two profiles compare via the relative
difference of the geometric means.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import DecodeError


@dataclass
class BinaryImage:
    width: int
    height: int
    bits: np.ndarray  # uint8 HxW, foreground = 1


@dataclass
class Contour:
    points: list[tuple[int, int]]  # (x, y), closed polygon
    kind: str  # "outer" | "hole"


@dataclass
class ContourProfile:
    count: int
    weighted_area: float
    weighted_moment: float
    gm: float


def binarize_otsu(png: bytes) -> BinaryImage:
    """Decode a PNG, grayscale via Rec.601 luma, threshold with Otsu.

    Foreground is the darker class (luma <= threshold).
    """
    try:
        img = Image.open(io.BytesIO(png))
        img.load()
    except Exception as exc:
        raise DecodeError(str(exc)) from exc
    if img.mode == "L":
        gray = np.asarray(img, dtype=np.uint8)
    else:
        if img.mode == "RGBA":
            bg = Image.new("RGBA", img.size, (255, 255, 255, 255))
            img = Image.alpha_composite(bg, img)
        rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
        luma = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
        gray = np.floor(luma + 0.5).astype(np.uint8)
    t = otsu_threshold(gray)
    bits = (gray <= t).astype(np.uint8)
    h, w = gray.shape
    return BinaryImage(w, h, bits)


def otsu_threshold(gray: np.ndarray) -> int:
    """Threshold maximizing between-class variance (smallest on ties)."""
    hist = np.bincount(gray.ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    w0 = np.cumsum(hist)
    w1 = total - w0
    cum = np.cumsum(hist * np.arange(256))
    mean_total = cum[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = cum / w0
        mu1 = (mean_total - cum) / w1
        var_b = w0 * w1 * (mu0 - mu1) ** 2
    var_b = np.nan_to_num(var_b, nan=0.0, posinf=0.0, neginf=0.0)
    return int(np.argmax(var_b))


# Moore neighbourhood in clockwise order starting east: used both ways.
_NEIGHBORS = [(0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1)]
_DIR = {d: k for k, d in enumerate(_NEIGHBORS)}


def find_contours(img: BinaryImage) -> list[Contour]:
    """All outer and hole borders of the foreground, by border following.

    Returned in raster-scan discovery order with no size filtering.
    Points are (x, y) pixel coordinates forming a closed border.
    """
    h, w = img.height, img.width
    # int32 working copy with a 1-pixel zero frame to avoid bounds checks
    f = np.zeros((h + 2, w + 2), dtype=np.int32)
    f[1:-1, 1:-1] = img.bits
    contours: list[Contour] = []
    nbd = 1
    for i in range(1, h + 1):
        for j in range(1, w + 1):
            fij = f[i, j]
            if fij == 0:
                continue
            if fij == 1 and f[i, j - 1] == 0:
                kind = "outer"
                i2, j2 = i, j - 1
            elif fij >= 1 and f[i, j + 1] == 0:
                kind = "hole"
                i2, j2 = i, j + 1
            else:
                continue
            nbd += 1
            contours.append(Contour(_follow(f, i, j, i2, j2, nbd), kind))
    return contours


def _follow(f: np.ndarray, i: int, j: int, i2: int, j2: int, nbd: int) -> list[tuple[int, int]]:
    """Trace one border starting at (i, j) from neighbour (i2, j2)."""
    start_dir = _DIR[(i2 - i, j2 - j)]
    i1 = j1 = None
    for k in range(1, 9):  # clockwise search for a nonzero neighbour
        di, dj = _NEIGHBORS[(start_dir + k) % 8]
        if f[i + di, j + dj] != 0:
            i1, j1 = i + di, j + dj
            break
    if i1 is None:
        f[i, j] = -nbd
        return [(j - 1, i - 1)]  # single-pixel border (x, y without the frame)

    points: list[tuple[int, int]] = []
    i2, j2 = i1, j1
    i3, j3 = i, j
    while True:
        # counterclockwise search around (i3, j3) starting after (i2, j2)
        d = _DIR[(i2 - i3, j2 - j3)]
        examined_right = False
        for k in range(1, 9):
            di, dj = _NEIGHBORS[(d - k) % 8]
            ni, nj = i3 + di, j3 + dj
            if f[ni, nj] != 0:
                i4, j4 = ni, nj
                break
            if (di, dj) == (0, 1):
                examined_right = True
        points.append((j3 - 1, i3 - 1))
        if examined_right:
            f[i3, j3] = -nbd
        elif f[i3, j3] == 1:
            f[i3, j3] = nbd
        if (i4, j4) == (i, j) and (i3, j3) == (i1, j1):
            break
        i2, j2 = i3, j3
        i3, j3 = i4, j4
    return points


def shoelace_area(points: list[tuple[int, int]]) -> float:
    """Absolute polygon area of a closed point sequence."""
    n = len(points)
    if n < 3:
        return 0.0
    acc = 0
    for k in range(n):
        x1, y1 = points[k]
        x2, y2 = points[(k + 1) % n]
        acc += x1 * y2 - x2 * y1
    return abs(acc) / 2.0


def bounding_rect_area(points: list[tuple[int, int]]) -> float:
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    return float((max(xs) - min(xs) + 1) * (max(ys) - min(ys) + 1))


def contour_profile(img: BinaryImage) -> ContourProfile:
    """Fold all contours into (count, A, M, GM).

    A = sum(Y_i^2)/sum(Y_i) over contour areas, M likewise over bounding
    rect areas; GM is the cube root of count * A * M.  Zero-area contours
    still count and contribute their rects.
    """
    contours = find_contours(img)
    return profile_from_contours(contours)


def profile_from_contours(contours: list[Contour]) -> ContourProfile:
    count = len(contours)
    if count == 0:
        return ContourProfile(0, 0.0, 0.0, 0.0)
    areas = [shoelace_area(c.points) for c in contours]
    rects = [bounding_rect_area(c.points) for c in contours]
    y = sum(areas)
    z = sum(rects)
    a = sum(v * v for v in areas) / y if y > 0 else 0.0
    m = sum(v * v for v in rects) / z if z > 0 else 0.0
    gm = (count * a * m) ** (1.0 / 3.0)
    return ContourProfile(count, a, m, gm)


def raw_dissimilarity(p1: ContourProfile, p2: ContourProfile) -> float:
    """Relative difference of the geometric means, in [0, 2]."""
    if p1.gm == 0.0 and p2.gm == 0.0:
        return 0.0
    return abs(p1.gm - p2.gm) / ((p1.gm + p2.gm) / 2.0)


def visual_similarity(p1: ContourProfile, p2: ContourProfile) -> float:
    """Map the raw [0, 2] dissimilarity onto a [0, 1] similarity."""
    return 1.0 - raw_dissimilarity(p1, p2) / 2.0
