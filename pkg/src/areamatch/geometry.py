"""Rectangle arithmetic, size levels, and area expansion/fusion primitives.

All rectangles are integer and half-open: [x_min, x_max) x [y_min, y_max),
so pixel areas, overlaps, and IoU are exact integer arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

DEFAULT_LEVELS = (80 ** 2, 130 ** 2, 256 ** 2, 390 ** 2, 560 ** 2)


class ExpansionError(ValueError):
    """An area cannot be expanded to the requested size within its image."""


@dataclass(frozen=True)
class ImageDims:
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"invalid image dims {self.width}x{self.height}")


@dataclass(frozen=True)
class Area:
    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        if self.x_min >= self.x_max or self.y_min >= self.y_max:
            raise ValueError(f"degenerate area {self.to_list()}")

    @property
    def width(self) -> int:
        return self.x_max - self.x_min

    @property
    def height(self) -> int:
        return self.y_max - self.y_min

    @property
    def size(self) -> int:
        """Pixel area W * H."""
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0

    @property
    def aspect(self) -> float:
        """max(W/H, H/W), always >= 1."""
        return max(self.width / self.height, self.height / self.width)

    def inside(self, dims: ImageDims) -> bool:
        return (self.x_min >= 0 and self.y_min >= 0
                and self.x_max <= dims.width and self.y_max <= dims.height)

    def contains(self, other: "Area") -> bool:
        return (self.x_min <= other.x_min and self.y_min <= other.y_min
                and self.x_max >= other.x_max and self.y_max >= other.y_max)

    def to_list(self) -> list[int]:
        return [self.x_min, self.y_min, self.x_max, self.y_max]

    @classmethod
    def from_list(cls, v) -> "Area":
        return cls(int(v[0]), int(v[1]), int(v[2]), int(v[3]))


@dataclass(frozen=True)
class LevelThresholds:
    """Ordered size thresholds TL_0 < ... < TL_L; L usable levels 0..L-1."""

    levels: tuple[int, ...] = DEFAULT_LEVELS

    def __post_init__(self):
        if len(self.levels) < 2:
            raise ValueError("need at least two thresholds")
        if any(a >= b for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError("thresholds must be strictly increasing")

    @property
    def num_levels(self) -> int:
        return len(self.levels) - 1

    @property
    def top_level(self) -> int:
        return self.num_levels - 1


def intersection_size(a: Area, b: Area) -> int:
    w = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    h = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    return w * h if w > 0 and h > 0 else 0


def overlap_ratio(a: Area, b: Area) -> float:
    """Intersection area over the smaller of the two areas, in [0, 1]."""
    return intersection_size(a, b) / min(a.size, b.size)


def iou(a: Area, b: Area) -> float:
    inter = intersection_size(a, b)
    return inter / (a.size + b.size - inter)


def fuse(a: Area, b: Area) -> Area:
    """Smallest axis-aligned rectangle containing both inputs."""
    return Area(min(a.x_min, b.x_min), min(a.y_min, b.y_min),
                max(a.x_max, b.x_max), max(a.y_max, b.y_max))


def assign_level(a: Area, t: LevelThresholds) -> int | None:
    """Level i with TL_i <= size < TL_{i+1}.

    Sizes below TL_0 return None; sizes at or above the top bin clamp to the
    top level (the open upper bin collapses into it).
    """
    size = a.size
    if size < t.levels[0]:
        return None
    for i in range(t.num_levels):
        if size < t.levels[i + 1]:
            return i
    return t.top_level


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _place(center: tuple[float, float], w: int, h: int, dims: ImageDims) -> Area:
    """Rect of the given size at the given center, shifted minimally inside."""
    if w > dims.width or h > dims.height:
        raise ExpansionError(f"{w}x{h} does not fit in {dims.width}x{dims.height}")
    x0 = _round_half_up(center[0] - w / 2.0)
    y0 = _round_half_up(center[1] - h / 2.0)
    x0 = min(max(x0, 0), dims.width - w)
    y0 = min(max(y0, 0), dims.height - h)
    return Area(x0, y0, x0 + w, y0 + h)


def expand_to_level(a: Area, target_level: int, t: LevelThresholds,
                    dims: ImageDims) -> Area:
    """Grow an area to reach at least the target level's lower size bound.

    With s = ceil(sqrt(TL_target)): both sides below s grow to s; a side
    already at s or more is kept and the other side grows to ceil(s^2 / side).
    The center is fixed apart from the minimal shift needed to stay inside.
    """
    target = t.levels[target_level]
    if a.size >= target:
        return a
    s = math.ceil(math.sqrt(target))
    if a.width < s and a.height < s:
        w, h = s, s
    elif a.width >= s:
        w, h = a.width, math.ceil(target / a.width)
    else:
        w, h = math.ceil(target / a.height), a.height
    return _place(a.center, w, h, dims)


def expand_to_aspect(a: Area, r_a: float, dims: ImageDims) -> Area:
    """Expand the shorter side so the aspect ratio W/H equals r_a."""
    if a.width / a.height > r_a:
        w, h = a.width, max(1, _round_half_up(a.width / r_a))
    else:
        w, h = max(1, _round_half_up(a.height * r_a)), a.height
    return _place(a.center, w, h, dims)


def full_image_area(dims: ImageDims) -> Area:
    return Area(0, 0, dims.width, dims.height)
