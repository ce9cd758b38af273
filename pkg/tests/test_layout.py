import re

import pytest

from slowfast_tokenizer import (
    BudgetPlan,
    FrameClass,
    FrameKind,
    InvalidInputError,
    PatchGrid,
    SpecialToken,
    TimestampText,
    VisionBlock,
    assemble_layout,
    render_timestamp,
)

SLOW, FAST = FrameKind.SLOW, FrameKind.FAST


def grid(rows, cols):
    return PatchGrid(rows, cols, rows * 28, cols * 28)


def plan_for(grids, tokens_per_slow=100, tokens_per_fast=30):
    return BudgetPlan(
        tokens_per_slow=tokens_per_slow,
        tokens_per_fast=tokens_per_fast,
        grids=tuple(grids),
        total_tokens=sum(g.tokens for g in grids),
    )


def test_minimal_single_slow_frame_layout():
    classes = [FrameClass(0, SLOW, 0)]
    layout = assemble_layout(classes, plan_for([grid(1, 1)]), [0.0])
    assert layout.elements == (
        SpecialToken("<|slow_frame|>"),
        TimestampText(0.0, "0.0s"),
        VisionBlock(0, grid(1, 1), SLOW),
    )
    assert layout.vision_token_total == 1
    assert layout.token_count == 3


def test_boundary_kinds_and_timestamps_follow_frame_order():
    classes = [FrameClass(0, SLOW, 0), FrameClass(1, FAST, 0)]
    layout = assemble_layout(
        classes, plan_for([grid(2, 2), grid(1, 1)]), [0.0, 1.0]
    )
    names = [el.name for el in layout.elements if isinstance(el, SpecialToken)]
    stamps = [el.text for el in layout.elements if isinstance(el, TimestampText)]
    kinds = [el.kind for el in layout.elements if isinstance(el, VisionBlock)]
    assert names == ["<|slow_frame|>", "<|fast_frame|>"]
    assert stamps == ["0.0s", "1.0s"]
    assert kinds == [SLOW, FAST]


@pytest.mark.parametrize(
    "slow_token,fast_token",
    [
        ("<|slow_frame|>", "<|fast_frame|>"),
        ("<SLOW>", "<FAST>"),
        ("[keyframe]", "[filler]"),
    ],
)
def test_boundary_token_names_are_configurable(slow_token, fast_token):
    classes = [FrameClass(0, SLOW, 0), FrameClass(1, FAST, 0)]
    layout = assemble_layout(
        classes,
        plan_for([grid(1, 1), grid(1, 1)]),
        [0.0, 0.5],
        slow_token=slow_token,
        fast_token=fast_token,
    )
    names = [el.name for el in layout.elements if isinstance(el, SpecialToken)]
    assert names == [slow_token, fast_token]


def test_timestamp_renders_at_tenth_second_precision():
    assert render_timestamp(22.34) == "22.3s"
    assert render_timestamp(0.0) == "0.0s"
    assert render_timestamp(1.0) == "1.0s"
    assert render_timestamp(59.96) == "60.0s"


def test_timestamp_rendering_is_monotone_and_tight():
    previous = -1.0
    for tenth in range(0, 2000, 7):
        seconds = tenth / 10 + 0.013
        text = render_timestamp(seconds)
        assert re.fullmatch(r"\d+\.\d{1}s", text)
        value = float(text[:-1])
        assert abs(value - seconds) <= 0.05 + 1e-9
        assert value >= previous
        previous = value


def test_timestamp_rejects_bad_values():
    with pytest.raises(InvalidInputError):
        render_timestamp(-1.0)
    with pytest.raises(InvalidInputError):
        render_timestamp(float("nan"))


def test_vision_total_matches_plan_total():
    grids = [grid(3, 4), grid(1, 2), grid(5, 5)]
    classes = [FrameClass(0, SLOW, 0), FrameClass(1, FAST, 0), FrameClass(2, SLOW, 2)]
    plan = plan_for(grids)
    layout = assemble_layout(classes, plan, [0.0, 0.4, 1.2])
    assert layout.vision_token_total == plan.total_tokens == 39


def test_misaligned_inputs_are_rejected():
    classes = [FrameClass(0, SLOW, 0)]
    with pytest.raises(InvalidInputError, match="misaligned"):
        assemble_layout(classes, plan_for([grid(1, 1), grid(1, 1)]), [0.0])
    with pytest.raises(InvalidInputError, match="misaligned"):
        assemble_layout(classes, plan_for([grid(1, 1)]), [0.0, 1.0])


def test_layout_json_round_shape():
    classes = [FrameClass(0, SLOW, 0)]
    layout = assemble_layout(classes, plan_for([grid(2, 3)]), [7.25])
    obj = layout.to_json_obj()
    assert obj == [
        {"type": "special", "name": "<|slow_frame|>"},
        {"type": "timestamp", "seconds": 7.25, "text": "7.2s"},
        {
            "type": "vision",
            "frame_index": 0,
            "rows": 2,
            "cols": 3,
            "kind": "slow",
        },
    ]
