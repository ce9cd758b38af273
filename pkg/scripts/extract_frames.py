#!/usr/bin/env python3
"""Dump video frames with ffmpeg and write a matching frame manifest.

The core tools consume pre-decoded frames only; this optional helper is the
out-of-process bridge from a video container to that manifest format.

Usage:
  python scripts/extract_frames.py input.mp4 --fps 2 --out-dir frames/
  slowfast-tok classify --manifest frames/manifest.json
"""

import argparse
import json
import shutil
import subprocess
import sys
from pathlib import Path


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("video", type=Path, help="Input video file")
    parser.add_argument("--fps", type=float, default=1.0,
                        help="Frames per second to sample (default 1)")
    parser.add_argument("--out-dir", type=Path, required=True,
                        help="Directory for PNG frames and manifest.json")
    parser.add_argument("--ffmpeg", default="ffmpeg",
                        help="Decoder binary (default ffmpeg)")
    args = parser.parse_args()

    if shutil.which(args.ffmpeg) is None:
        print(f"error: decoder {args.ffmpeg!r} not found on PATH", file=sys.stderr)
        return 1
    if args.fps <= 0:
        print("error: --fps must be positive", file=sys.stderr)
        return 1

    args.out_dir.mkdir(parents=True, exist_ok=True)
    pattern = args.out_dir / "frame_%06d.png"
    cmd = [
        args.ffmpeg, "-hide_banner", "-loglevel", "error",
        "-i", str(args.video),
        "-vf", f"fps={args.fps}",
        "-start_number", "0",
        str(pattern),
    ]
    proc = subprocess.run(cmd)
    if proc.returncode != 0:
        print("error: frame extraction failed", file=sys.stderr)
        return proc.returncode

    frames = sorted(args.out_dir.glob("frame_*.png"))
    if not frames:
        print("error: decoder produced no frames", file=sys.stderr)
        return 1
    manifest = {
        "version": "1",
        "fps": args.fps,
        "frames": [{"path": p.name} for p in frames],
    }
    manifest_path = args.out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {len(frames)} frames and {manifest_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
