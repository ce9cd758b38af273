import json

import numpy as np
import pytest
from PIL import Image

from slowfast_tokenizer import (
    FrameManifest,
    InvalidConfigError,
    InvalidInputError,
    Modality,
    PipelineConfig,
    load_frame_dims,
    load_frames,
)


def test_default_config_carries_documented_constants():
    cfg = PipelineConfig()
    assert cfg.geometry.patch_px == 14
    assert cfg.geometry.merge_factor == 2
    assert cfg.geometry.image_token_cap == 20_480
    assert cfg.geometry.video_token_budget == 75_000
    assert cfg.geometry.fast_ratio == 0.3
    assert cfg.similarity.threshold == 0.95
    assert cfg.rope.inv_freq_base == 1_000_000.0
    assert cfg.packing.capacity == 8_192
    assert cfg.packing.fractions == {
        Modality.VIDEO: 0.24,
        Modality.IMAGE: 0.50,
        Modality.TEXT: 0.26,
    }
    assert cfg.special_tokens.slow_frame == "<|slow_frame|>"
    assert cfg.special_tokens.fast_frame == "<|fast_frame|>"


def test_config_sections_load_from_dict():
    cfg = PipelineConfig.from_dict(
        {
            "geometry": {"video_token_budget": 1000, "max_tokens_per_frame": 256},
            "similarity": {"threshold": 0.9},
            "rope": {"inv_freq_base": 8_000_000.0, "axis_split": [8, 12, 12]},
            "packing": {"capacity": 131_072, "fractions": {"text": 1.0}},
            "special_tokens": {"slow_frame": "<S>", "fast_frame": "<F>"},
        }
    )
    assert cfg.geometry.video_token_budget == 1000
    assert cfg.similarity.threshold == 0.9
    assert cfg.rope.inv_freq_base == 8_000_000.0
    assert cfg.rope.axis_split == (8, 12, 12)
    assert cfg.packing.capacity == 131_072
    assert cfg.packing.fractions == {Modality.TEXT: 1.0}
    assert cfg.special_tokens.slow_frame == "<S>"


def test_config_rejects_unknown_keys():
    with pytest.raises(InvalidConfigError, match="unknown config section"):
        PipelineConfig.from_dict({"geometri": {}})
    with pytest.raises(InvalidConfigError, match="unknown key"):
        PipelineConfig.from_dict({"geometry": {"patchpx": 14}})
    with pytest.raises(InvalidConfigError, match="unknown modality"):
        PipelineConfig.from_dict({"packing": {"fractions": {"audio": 1.0}}})


def test_config_rejects_bad_values():
    with pytest.raises(InvalidConfigError):
        PipelineConfig.from_dict({"geometry": {"fast_ratio": 0.0}})
    with pytest.raises(InvalidConfigError):
        PipelineConfig.from_dict({"similarity": {"threshold": 1.5}})
    with pytest.raises(InvalidConfigError):
        PipelineConfig.from_dict(
            {"special_tokens": {"slow_frame": "<X>", "fast_frame": "<X>"}}
        )


def test_config_loads_from_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"geometry": {"image_token_cap": 64}}))
    cfg = PipelineConfig.load(path)
    assert cfg.geometry.image_token_cap == 64
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(InvalidConfigError):
        PipelineConfig.load(bad)


def manifest_dict(frames, **extra):
    data = {"version": "1", "frames": frames}
    data.update(extra)
    return data


def test_manifest_fps_timestamps():
    manifest = FrameManifest.from_dict(
        manifest_dict([{"path": "a.png"}, {"path": "b.png"}], fps=2.0)
    )
    assert manifest.timestamps() == [0.0, 0.5]


def test_manifest_explicit_timestamps():
    manifest = FrameManifest.from_dict(
        manifest_dict(
            [
                {"path": "a.png", "timestamp_s": 0.25},
                {"path": "b.png", "timestamp_s": 1.5},
            ]
        )
    )
    assert manifest.timestamps() == [0.25, 1.5]


def test_manifest_timing_validation():
    with pytest.raises(InvalidInputError, match="not both"):
        FrameManifest.from_dict(
            manifest_dict([{"path": "a.png", "timestamp_s": 0.0}], fps=1.0)
        )
    with pytest.raises(InvalidInputError, match="timestamps"):
        FrameManifest.from_dict(manifest_dict([{"path": "a.png"}]))
    with pytest.raises(InvalidInputError, match="strictly increase"):
        FrameManifest.from_dict(
            manifest_dict(
                [
                    {"path": "a.png", "timestamp_s": 1.0},
                    {"path": "b.png", "timestamp_s": 1.0},
                ]
            )
        )


def test_manifest_rejects_unknown_keys_and_versions():
    with pytest.raises(InvalidInputError, match="unknown manifest key"):
        FrameManifest.from_dict(
            manifest_dict([{"path": "a.png"}], fps=1.0, decoder="ffmpeg")
        )
    with pytest.raises(InvalidInputError, match="unknown key"):
        FrameManifest.from_dict(
            manifest_dict([{"path": "a.png", "w": 3}], fps=1.0)
        )
    with pytest.raises(InvalidInputError, match="version"):
        FrameManifest.from_dict({"version": "2", "fps": 1.0, "frames": [{"path": "a"}]})


def test_manifest_requires_frames():
    with pytest.raises(InvalidInputError, match="no frames"):
        FrameManifest.from_dict({"version": "1", "fps": 1.0, "frames": []})


def test_load_frames_decodes_png_ppm_and_raw(tmp_path):
    rng = np.random.default_rng(0)
    png_arr = rng.integers(0, 256, size=(5, 7, 3), dtype=np.uint8)
    Image.fromarray(png_arr, "RGB").save(tmp_path / "f0.png")
    ppm_arr = rng.integers(0, 256, size=(4, 6, 3), dtype=np.uint8)
    Image.fromarray(ppm_arr, "RGB").save(tmp_path / "f1.ppm")
    raw_arr = rng.integers(0, 256, size=(2, 3, 3), dtype=np.uint8)
    (tmp_path / "f2.rgb").write_bytes(raw_arr.tobytes())

    manifest = FrameManifest.from_dict(
        manifest_dict(
            [
                {"path": "f0.png"},
                {"path": "f1.ppm"},
                {"path": "f2.rgb", "width_px": 3, "height_px": 2},
            ],
            fps=1.0,
        )
    )
    frames = load_frames(manifest, tmp_path)
    assert [(f.width_px, f.height_px) for f in frames] == [(7, 5), (6, 4), (3, 2)]
    assert np.array_equal(frames[0].as_array(), png_arr)
    assert np.array_equal(frames[1].as_array(), ppm_arr)
    assert np.array_equal(frames[2].as_array(), raw_arr)
    assert [f.timestamp_s for f in frames] == [0.0, 1.0, 2.0]
    assert load_frame_dims(manifest, tmp_path) == [(7, 5), (6, 4), (3, 2)]


def test_frame_diagnostics_name_the_frame(tmp_path):
    (tmp_path / "junk.png").write_bytes(b"this is not an image")
    manifest = FrameManifest.from_dict(
        manifest_dict([{"path": "junk.png"}], fps=1.0)
    )
    with pytest.raises(InvalidInputError, match=r"frame 0 .*junk\.png"):
        load_frames(manifest, tmp_path)

    (tmp_path / "short.rgb").write_bytes(b"\x00" * 5)
    manifest2 = FrameManifest.from_dict(
        manifest_dict(
            [{"path": "short.rgb", "width_px": 4, "height_px": 4}], fps=1.0
        )
    )
    with pytest.raises(InvalidInputError, match="expected 48"):
        load_frames(manifest2, tmp_path)
    with pytest.raises(InvalidInputError, match="expected 48"):
        load_frame_dims(manifest2, tmp_path)


def test_load_frame_dims_reads_headers_only(tmp_path, write_solid_png):
    write_solid_png(tmp_path / "big.png", 4000, 3000, (12, 34, 56))
    manifest = FrameManifest.from_dict(
        manifest_dict([{"path": "big.png"}], fps=1.0)
    )
    assert load_frame_dims(manifest, tmp_path) == [(4000, 3000)]
