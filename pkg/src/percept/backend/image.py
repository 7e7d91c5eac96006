"""Image I/O, resizing, color conversion and photometric adjustments.

Images are numpy arrays: ``uint8`` of shape (H, W, 3) in RGB order for
storage, ``float32`` of shape (H, W, C) with C in {1, 3} after
:func:`normalize`.  Every function returns a new array.  Float results are
re-quantized with round-half-away-from-zero and clamped to [0, 255].
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, fields
from typing import Tuple

import numpy as np

from ..errors import CorruptHeader, InvalidParam, UnsupportedFormat
from ..rng import RngStream

_WHITESPACE = b" \t\r\n\x0b\x0c"
_DIGITS = re.compile(rb"\d+")


def check_image(image) -> np.ndarray:
    image = np.asarray(image)
    if image.dtype != np.uint8 or image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected uint8 (H, W, 3) image, got {image.dtype} {image.shape}")
    if image.shape[0] < 1 or image.shape[1] < 1:
        raise ValueError("image must be at least 1x1")
    return image


def quantize(values) -> np.ndarray:
    """Round half away from zero and clamp into uint8."""
    values = np.asarray(values, dtype=np.float64)
    rounded = np.floor(np.abs(values) + 0.5) * np.sign(values)
    return np.clip(rounded, 0, 255).astype(np.uint8)


# ---------------------------------------------------------------- PPM / PNG

def _ppm_header(data: bytes):
    """Parse a P6 header; return (width, height, maxval, pixel offset)."""
    if data[:2] != b"P6":
        raise UnsupportedFormat("not a binary PPM (P6) file")
    tokens = []
    pos = 2
    while len(tokens) < 3:
        if pos >= len(data):
            raise CorruptHeader("PPM header ends early")
        c = data[pos:pos + 1]
        if c == b"#":
            end = data.find(b"\n", pos)
            if end < 0:
                raise CorruptHeader("unterminated comment in PPM header")
            pos = end + 1
        elif c in _WHITESPACE and c:
            pos += 1
        else:
            match = _DIGITS.match(data, pos)
            if match is None:
                raise CorruptHeader(f"unexpected byte {c!r} in PPM header")
            tokens.append(int(match.group()))
            pos = match.end()
    if pos >= len(data) or data[pos:pos + 1] not in _WHITESPACE:
        raise CorruptHeader("missing whitespace after PPM maxval")
    return tokens[0], tokens[1], tokens[2], pos + 1


def decode_ppm(data: bytes) -> np.ndarray:
    width, height, maxval, offset = _ppm_header(data)
    if width < 1 or height < 1:
        raise CorruptHeader(f"invalid PPM size {width}x{height}")
    if maxval != 255:
        raise UnsupportedFormat(f"PPM maxval {maxval} unsupported (only 255)")
    size = width * height * 3
    pixels = data[offset:offset + size]
    if len(pixels) != size:
        raise CorruptHeader(f"PPM pixel data truncated: {len(pixels)} of {size} bytes")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(height, width, 3).copy()


def encode_ppm(image) -> bytes:
    image = check_image(image)
    height, width = image.shape[:2]
    return b"P6\n%d %d\n255\n" % (width, height) + np.ascontiguousarray(image).tobytes()


def load_image(path) -> np.ndarray:
    """Read a P6 PPM or an 8-bit RGB PNG (PNG needs Pillow)."""
    path = os.fspath(path)
    with open(path, "rb") as f:
        data = f.read()
    if data[:2] == b"P6":
        return decode_ppm(data)
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        return _load_png(path)
    raise UnsupportedFormat(f"{path}: unrecognized image format")


def save_image(image, path) -> None:
    path = os.fspath(path)
    suffix = os.path.splitext(path)[1].lower()
    if suffix in (".ppm", ".pnm", ""):
        with open(path, "wb") as f:
            f.write(encode_ppm(image))
    elif suffix == ".png":
        _save_png(check_image(image), path)
    else:
        raise UnsupportedFormat(f"cannot write {suffix!r} images")


def _pillow():
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover - depends on environment
        raise UnsupportedFormat("PNG support requires Pillow (pip install 'artifact[png]')") from exc
    return Image


def _load_png(path):
    Image = _pillow()
    with Image.open(path) as img:
        if img.mode != "RGB":
            raise UnsupportedFormat(f"{path}: PNG mode {img.mode} unsupported (8-bit RGB only)")
        return np.array(img, dtype=np.uint8)


def _save_png(image, path):
    _pillow().fromarray(image, mode="RGB").save(path, format="PNG")


# ---------------------------------------------------------------- geometry

def resize_bilinear(image, out_width: int, out_height: int) -> np.ndarray:
    """Bilinear resize with half-pixel centers and clamped edges."""
    image = check_image(image)
    if out_width < 1 or out_height < 1:
        raise ValueError("output size must be at least 1x1")
    height, width = image.shape[:2]

    def axis(n_in, n_out):
        src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        src = np.clip(src, 0.0, n_in - 1)
        lo = np.floor(src).astype(np.int64)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, src - lo

    y0, y1, fy = axis(height, out_height)
    x0, x1, fx = axis(width, out_width)
    img = image.astype(np.float64)
    fx = fx[None, :, None]
    top = img[y0][:, x0] * (1 - fx) + img[y0][:, x1] * fx
    bottom = img[y1][:, x0] * (1 - fx) + img[y1][:, x1] * fx
    fy = fy[:, None, None]
    return quantize(top * (1 - fy) + bottom * fy)


def flip_left_right(image) -> np.ndarray:
    return np.ascontiguousarray(check_image(image)[:, ::-1])


def normalize(image) -> np.ndarray:
    return check_image(image).astype(np.float32) / np.float32(255.0)


# ---------------------------------------------------------------- color

def rgb_to_hsv(rgb) -> np.ndarray:
    """Hexcone RGB -> HSV on floats in [0, 1]; uint8 input is scaled first.

    Hue is in degrees [0, 360) and is 0 for achromatic colors.
    """
    rgb = np.asarray(rgb)
    if rgb.dtype == np.uint8:
        rgb = rgb / 255.0
    rgb = rgb.astype(np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    value = rgb.max(axis=-1)
    chroma = value - rgb.min(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        saturation = np.where(value > 0, chroma / np.where(value > 0, value, 1.0), 0.0)
        safe = np.where(chroma > 0, chroma, 1.0)
        hue = np.select(
            [chroma == 0, value == r, value == g],
            [0.0, ((g - b) / safe) % 6.0, (b - r) / safe + 2.0],
            (r - g) / safe + 4.0,
        )
    hue = (hue * 60.0) % 360.0
    hue = np.where(hue >= 360.0, 0.0, hue)
    return np.stack([hue, saturation, value], axis=-1)


def hsv_to_rgb(hsv) -> np.ndarray:
    """Inverse of :func:`rgb_to_hsv`; returns floats in [0, 1]."""
    hsv = np.asarray(hsv, dtype=np.float64)
    h, s, v = hsv[..., 0] % 360.0, hsv[..., 1], hsv[..., 2]
    sector = h / 60.0
    i = np.floor(sector).astype(np.int64) % 6
    f = sector - np.floor(sector)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    choices = [i == k for k in range(6)]
    r = np.select(choices, [v, q, p, p, t, v])
    g = np.select(choices, [t, v, v, q, p, p])
    b = np.select(choices, [p, p, t, v, v, q])
    return np.stack([r, g, b], axis=-1)


# ---------------------------------------------------------------- photometric

def adjust_brightness(image, delta: float) -> np.ndarray:
    """Add ``delta`` (8-bit scale) to every channel."""
    return quantize(check_image(image).astype(np.float64) + delta)


def adjust_contrast(image, alpha: float) -> np.ndarray:
    """Scale every channel by ``alpha`` (plain multiplication, no mean centering)."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    return quantize(check_image(image).astype(np.float64) * alpha)


def adjust_saturation(image, alpha: float) -> np.ndarray:
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    hsv = rgb_to_hsv(check_image(image))
    hsv[..., 1] = np.clip(hsv[..., 1] * alpha, 0.0, 1.0)
    return quantize(hsv_to_rgb(hsv) * 255.0)


def adjust_hue(image, delta_degrees: float) -> np.ndarray:
    hsv = rgb_to_hsv(check_image(image))
    hsv[..., 0] = (hsv[..., 0] + delta_degrees) % 360.0
    return quantize(hsv_to_rgb(hsv) * 255.0)


# ---------------------------------------------------------------- drawing

def draw_box(image, box, color=(255, 0, 0), thickness: int = 1) -> np.ndarray:
    """Draw an axis-aligned rectangle outline.

    ``box`` is ``[x_min, y_min, x_max, y_max]`` in inclusive pixel
    coordinates.  The outline grows inward from the box edge.  Parts outside
    the image are clipped.
    """
    if thickness < 1:
        raise ValueError("thickness must be at least 1")
    out = check_image(image).copy()
    height, width = out.shape[:2]
    x0, y0, x1, y1 = (int(v) for v in box)
    ys, xs = np.mgrid[0:height, 0:width]
    inside = (xs >= x0) & (xs <= x1) & (ys >= y0) & (ys <= y1)
    core = (xs >= x0 + thickness) & (xs <= x1 - thickness) & (ys >= y0 + thickness) & (ys <= y1 - thickness)
    out[inside & ~core] = np.asarray(color, dtype=np.uint8)
    return out


def draw_keypoints(image, points, radius: int = 1, color=(0, 255, 0)) -> np.ndarray:
    """Draw filled discs of ``radius`` pixels centered on pixel ``points``."""
    if radius < 1:
        raise ValueError("radius must be at least 1")
    out = check_image(image).copy()
    height, width = out.shape[:2]
    ys, xs = np.mgrid[0:height, 0:width]
    color = np.asarray(color, dtype=np.uint8)
    for x, y in np.asarray(points, dtype=np.float64).reshape(-1, 2):
        out[(xs - x) ** 2 + (ys - y) ** 2 <= radius * radius] = color
    return out


# ---------------------------------------------------------------- sampling

@dataclass(frozen=True)
class AugmentationConfig:
    """Ranges and application probabilities of the photometric augmentations."""

    contrast: Tuple[float, float] = (0.5, 1.5)
    brightness: Tuple[float, float] = (-32.0, 32.0)
    saturation: Tuple[float, float] = (0.5, 1.5)
    hue: Tuple[float, float] = (-18.0, 18.0)
    contrast_probability: float = 0.5
    brightness_probability: float = 0.5
    saturation_probability: float = 0.5
    hue_probability: float = 0.5

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name.endswith("_probability"):
                if not 0.0 <= value <= 1.0:
                    raise InvalidParam(f"{f.name} must lie in [0, 1]")
            else:
                lower, upper = value
                if lower > upper:
                    raise InvalidParam(f"{f.name} range has lower > upper")


AUGMENTATIONS = ("contrast", "brightness", "saturation", "hue")


def sample_params(config: AugmentationConfig, rng: RngStream) -> dict:
    """Draw ``(apply, value)`` for each augmentation.

    Order is contrast, brightness, saturation, hue; each consumes one draw for
    the flag and one for the value, whether or not it ends up applied.
    """
    params = {}
    for name in AUGMENTATIONS:
        apply = rng.bernoulli(getattr(config, f"{name}_probability"))
        lower, upper = getattr(config, name)
        params[name] = (apply, rng.uniform(lower, upper))
    return params
