"""Frame manifests: the on-disk input format for video/image pipelines.

A manifest is a strict JSON object:

    {
      "version": "1",
      "fps": 2.0,                     # or omit and timestamp every frame
      "frames": [
        {"path": "frame0.png"},
        {"path": "frame1.rgb", "width_px": 640, "height_px": 360}
      ]
    }

Frames with ``width_px``/``height_px`` are raw row-major RGB blobs of
exactly width*height*3 bytes; anything else is decoded with Pillow
(PNG, PPM, ...).  Timestamps come from ``fps`` (frame i at i/fps seconds)
or from per-frame ``timestamp_s`` values, never both.  Paths are resolved
relative to the manifest's directory.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional

from PIL import Image

from .errors import InvalidInputError
from .frames import FrameRecord

# Native-resolution inputs legitimately reach hundreds of megapixels; keep
# Pillow's decompression-bomb ceiling above them (bounded, not disabled).
Image.MAX_IMAGE_PIXELS = max(Image.MAX_IMAGE_PIXELS or 0, 1 << 30)

MANIFEST_VERSION = "1"

_FRAME_KEYS = {"path", "width_px", "height_px", "timestamp_s"}
_MANIFEST_KEYS = {"version", "fps", "frames"}


@dataclass(frozen=True)
class ManifestFrame:
    path: str
    width_px: Optional[int] = None
    height_px: Optional[int] = None
    timestamp_s: Optional[float] = None

    @property
    def is_raw(self) -> bool:
        return self.width_px is not None or self.height_px is not None


@dataclass(frozen=True)
class FrameManifest:
    version: str
    fps: Optional[float]
    frames: tuple[ManifestFrame, ...]

    @classmethod
    def from_dict(cls, data: Mapping) -> "FrameManifest":
        unknown = sorted(set(data) - _MANIFEST_KEYS)
        if unknown:
            raise InvalidInputError(f"unknown manifest key(s): {', '.join(unknown)}")
        version = data.get("version")
        if version != MANIFEST_VERSION:
            raise InvalidInputError(
                f"unsupported manifest version {version!r}, expected "
                f"{MANIFEST_VERSION!r}"
            )
        raw_frames = data.get("frames")
        if not isinstance(raw_frames, list) or not raw_frames:
            raise InvalidInputError("no frames")
        frames = []
        for i, entry in enumerate(raw_frames):
            if not isinstance(entry, Mapping):
                raise InvalidInputError(f"frame {i}: entry must be an object")
            bad = sorted(set(entry) - _FRAME_KEYS)
            if bad:
                raise InvalidInputError(
                    f"frame {i}: unknown key(s): {', '.join(bad)}"
                )
            if "path" not in entry or not entry["path"]:
                raise InvalidInputError(f"frame {i}: missing path")
            width = entry.get("width_px")
            height = entry.get("height_px")
            if (width is None) != (height is None):
                raise InvalidInputError(
                    f"frame {i}: raw frames need both width_px and height_px"
                )
            frames.append(
                ManifestFrame(
                    path=str(entry["path"]),
                    width_px=width,
                    height_px=height,
                    timestamp_s=entry.get("timestamp_s"),
                )
            )
        fps = data.get("fps")
        manifest = cls(version=version, fps=fps, frames=tuple(frames))
        manifest._validate_timing()
        return manifest

    @classmethod
    def load(cls, path: Path | str) -> "FrameManifest":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise InvalidInputError(f"cannot read manifest {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"manifest {path}: {exc}") from None
        if not isinstance(data, dict):
            raise InvalidInputError(f"manifest {path} must hold a JSON object")
        return cls.from_dict(data)

    def _validate_timing(self) -> None:
        stamped = [f for f in self.frames if f.timestamp_s is not None]
        if self.fps is not None:
            if not self.fps > 0:
                raise InvalidInputError(f"fps must be positive, got {self.fps!r}")
            if stamped:
                raise InvalidInputError(
                    "provide either fps or per-frame timestamps, not both"
                )
            return
        if len(stamped) != len(self.frames):
            raise InvalidInputError(
                "frames need timestamps: set fps or give every frame a "
                "timestamp_s"
            )
        times = [float(f.timestamp_s) for f in self.frames]
        for prev, cur in zip(times, times[1:]):
            if cur <= prev:
                raise InvalidInputError(
                    f"timestamps must strictly increase: {prev} then {cur}"
                )

    def timestamps(self) -> list[float]:
        if self.fps is not None:
            return [i / self.fps for i in range(len(self.frames))]
        return [float(f.timestamp_s) for f in self.frames]


def _frame_error(index: int, path: Path, reason: str) -> InvalidInputError:
    return InvalidInputError(f"frame {index} ({path}): {reason}")


def _read_raw(entry: ManifestFrame, path: Path, index: int) -> bytes:
    expected = entry.width_px * entry.height_px * 3
    try:
        size = os.path.getsize(path)
    except OSError as exc:
        raise _frame_error(index, path, str(exc)) from None
    if size != expected:
        raise _frame_error(
            index, path,
            f"raw blob holds {size} bytes, expected {expected} for "
            f"{entry.width_px}x{entry.height_px} RGB",
        )
    with open(path, "rb") as fh:
        return fh.read()


def _decode_image(path: Path, index: int) -> tuple[int, int, bytes]:
    try:
        with Image.open(path) as im:
            rgb = im.convert("RGB")
            return rgb.width, rgb.height, rgb.tobytes()
    except OSError as exc:
        raise _frame_error(index, path, f"cannot decode: {exc}") from None


def load_frames(manifest: FrameManifest, base_dir: Path | str) -> list[FrameRecord]:
    """Decode every frame into a FrameRecord, with per-frame diagnostics."""
    base = Path(base_dir)
    times = manifest.timestamps()
    records = []
    for i, entry in enumerate(manifest.frames):
        path = base / entry.path
        if entry.is_raw:
            if entry.width_px < 1 or entry.height_px < 1:
                raise _frame_error(
                    i, path, f"zero-sized frame: {entry.width_px}x{entry.height_px}"
                )
            width, height = entry.width_px, entry.height_px
            pixels = _read_raw(entry, path, i)
        else:
            width, height, pixels = _decode_image(path, i)
        records.append(
            FrameRecord(
                index=i,
                timestamp_s=times[i],
                width_px=width,
                height_px=height,
                pixels=pixels,
            )
        )
    return records


def load_frame_dims(
    manifest: FrameManifest, base_dir: Path | str
) -> list[tuple[int, int]]:
    """(width, height) per frame without decoding pixel data."""
    base = Path(base_dir)
    dims = []
    for i, entry in enumerate(manifest.frames):
        path = base / entry.path
        if entry.is_raw:
            if entry.width_px < 1 or entry.height_px < 1:
                raise _frame_error(
                    i, path, f"zero-sized frame: {entry.width_px}x{entry.height_px}"
                )
            # Validate the blob without reading it.
            expected = entry.width_px * entry.height_px * 3
            try:
                size = os.path.getsize(path)
            except OSError as exc:
                raise _frame_error(i, path, str(exc)) from None
            if size != expected:
                raise _frame_error(
                    i, path, f"raw blob holds {size} bytes, expected {expected}"
                )
            dims.append((entry.width_px, entry.height_px))
        else:
            try:
                with Image.open(path) as im:
                    dims.append((im.width, im.height))
            except OSError as exc:
                raise _frame_error(i, path, f"cannot decode: {exc}") from None
    return dims
