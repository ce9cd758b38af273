import json
import struct
import zlib

import pytest


@pytest.fixture
def write_solid_png():
    """Stream a solid-color PNG without materializing the pixel plane."""

    def _write(path, width, height, rgb=(0, 0, 0)):
        def chunk(tag, data):
            return (
                struct.pack(">I", len(data))
                + tag
                + data
                + struct.pack(">I", zlib.crc32(tag + data) & 0xFFFFFFFF)
            )

        ihdr = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
        comp = zlib.compressobj(6)
        row = b"\x00" + bytes(rgb) * width
        idat = bytearray()
        for _ in range(height):
            idat += comp.compress(row)
        idat += comp.flush()
        with open(path, "wb") as fh:
            fh.write(b"\x89PNG\r\n\x1a\n")
            fh.write(chunk(b"IHDR", ihdr))
            fh.write(chunk(b"IDAT", bytes(idat)))
            fh.write(chunk(b"IEND", b""))

    return _write


@pytest.fixture(scope="session")
def video_budget_case(tmp_path_factory):
    """A 30-frame clip (10 slow / 20 fast) whose 1-px-tall frames make grid
    quantization exact, so the solver lands on 4688 tokens per slow frame
    under the default 75000 budget with the 0.3 fast ratio."""
    root = tmp_path_factory.mktemp("budget_case")
    width, height = 140_000, 1
    frames = []
    for group in range(10):
        color = bytes((0, 0, 0)) if group % 2 == 0 else bytes((255, 255, 255))
        for member in range(3):
            i = 3 * group + member
            path = root / f"f{i:02d}.rgb"
            path.write_bytes(color * width)
            frames.append(
                {"path": path.name, "width_px": width, "height_px": height}
            )
    manifest_path = root / "manifest.json"
    manifest_path.write_text(
        json.dumps({"version": "1", "fps": 1.0, "frames": frames})
    )
    config_path = root / "config.json"
    config_path.write_text(
        json.dumps({"geometry": {"max_tokens_per_frame": 5000}})
    )
    return manifest_path, config_path
