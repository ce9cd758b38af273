"""Command-line surface for batch data-processing jobs.

Every command is deterministic: identical inputs and config produce
byte-identical output.  Exit codes: 0 success, 2 input error, 3 infeasible
budget/mixture, 4 grounding parse error.  SLOWFAST_THREADS caps internal
parallelism without changing any output.
"""

from __future__ import annotations

import functools
import json
import math
import sys
from pathlib import Path
from typing import Optional

import click

from .budget import fit_grid, solve_video_budget
from .config import PipelineConfig
from .errors import (
    BudgetTooSmallError,
    GroundingParseError,
    InfeasibleMixtureError,
    InvalidInputError,
)
from .frames import classify_frames_detailed
from .grounding import (
    GroundingItem,
    GroundingVariant,
    emit_grounding,
    scan_grounding,
)
from .gspo import DEFAULT_CLIP_EPS, GroupRollouts, gspo_objective
from .jsonio import dumps_canonical
from .layout import TokenLayout, VisionBlock, assemble_layout
from .manifest import FrameManifest, load_frame_dims, load_frames
from .packing import (
    Modality,
    SequenceItem,
    balance_workers,
    estimate_cost,
    pack_windows,
    plan_mixture,
)
from .rope import build_rope_index_table

EXIT_INPUT_ERROR = 2
EXIT_INFEASIBLE = 3
EXIT_PARSE_ERROR = 4


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _pipeline_command(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except GroundingParseError as exc:
            _fail(EXIT_PARSE_ERROR, str(exc))
        except (BudgetTooSmallError, InfeasibleMixtureError) as exc:
            _fail(EXIT_INFEASIBLE, str(exc))
        except InvalidInputError as exc:
            _fail(EXIT_INPUT_ERROR, str(exc))
        except (OSError, ValueError, TypeError) as exc:
            _fail(EXIT_INPUT_ERROR, str(exc))

    return wrapper


def _load_config(path: Optional[Path]) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    return PipelineConfig.load(path)


def _read_text(path: Path) -> str:
    if str(path) == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _read_json(path: Path):
    text = _read_text(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: {exc}") from None


def _write_payload(payload, out: Optional[Path]) -> None:
    text = dumps_canonical(payload)
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _write_text(text: str, out: Optional[Path]) -> None:
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _classes_payload(classes) -> list[dict]:
    return [
        {"index": c.index, "kind": c.kind.value, "anchor_index": c.anchor_index}
        for c in classes
    ]


def _grid_payload(grid) -> dict:
    return {
        "rows": grid.rows,
        "cols": grid.cols,
        "resized_h_px": grid.resized_h_px,
        "resized_w_px": grid.resized_w_px,
        "tokens": grid.tokens,
    }


config_option = click.option(
    "--config", "config_path", type=Path, default=None,
    help="Pipeline config JSON (defaults apply when omitted).",
)
out_option = click.option(
    "--out", "out_path", type=Path, default=None,
    help="Output file (stdout when omitted).",
)


@click.group()
def main():
    """Deterministic multimodal token-pipeline tools."""


@main.command()
@click.option("--manifest", "manifest_path", type=Path, required=True,
              help="Frame manifest JSON.")
@config_option
@out_option
@_pipeline_command
def classify(manifest_path: Path, config_path: Optional[Path], out_path: Optional[Path]):
    """Classify manifest frames as slow or fast."""
    cfg = _load_config(config_path)
    manifest = FrameManifest.load(manifest_path)
    frames = load_frames(manifest, Path(manifest_path).parent)
    classes, reports = classify_frames_detailed(
        frames,
        threshold=cfg.similarity.threshold,
        grid_side=cfg.similarity.grid_side,
        per_patch_tol=cfg.similarity.per_patch_tol,
    )
    payload = {
        "classes": _classes_payload(classes),
        "similarity": [
            {
                "anchor_index": r.anchor_index,
                "target_index": r.target_index,
                "grid_side": r.grid_side,
                "unchanged_fraction": r.unchanged_fraction,
            }
            for r in reports
        ],
    }
    _write_payload(payload, out_path)


@main.command()
@click.option("--manifest", "manifest_path", type=Path, required=True,
              help="Frame manifest JSON.")
@click.option("--mode", type=click.Choice(["video", "image"]), default="video",
              show_default=True, help="Budget frames jointly (video) or cap "
              "each frame independently (image).")
@config_option
@out_option
@_pipeline_command
def tokenize(manifest_path: Path, mode: str, config_path: Optional[Path],
             out_path: Optional[Path]):
    """Solve token budgets and emit layout, grids, and rotary indices."""
    cfg = _load_config(config_path)
    manifest = FrameManifest.load(manifest_path)
    base_dir = Path(manifest_path).parent

    if mode == "image":
        dims = load_frame_dims(manifest, base_dir)
        grids = [
            fit_grid(w, h, cfg.geometry.image_token_cap, cfg.geometry)
            for w, h in dims
        ]
        layout = TokenLayout(
            tuple(VisionBlock(i, grid, None) for i, grid in enumerate(grids))
        )
        table = build_rope_index_table(layout, None, cfg.rope.temporal_unit_s)
        payload = {
            "grids": [_grid_payload(g) for g in grids],
            "layout": layout.to_json_obj(),
            "rope_index": table.to_lists(),
            "summary": {
                "mode": "image",
                "n_images": len(grids),
                "token_cap": cfg.geometry.image_token_cap,
                "total_tokens": sum(g.tokens for g in grids),
            },
        }
        _write_payload(payload, out_path)
        return

    frames = load_frames(manifest, base_dir)
    classes, _ = classify_frames_detailed(
        frames,
        threshold=cfg.similarity.threshold,
        grid_side=cfg.similarity.grid_side,
        per_patch_tol=cfg.similarity.per_patch_tol,
    )
    dims = [(f.width_px, f.height_px) for f in frames]
    plan = solve_video_budget(classes, dims, cfg.geometry)
    times = [f.timestamp_s for f in frames]
    layout = assemble_layout(
        classes, plan, times,
        slow_token=cfg.special_tokens.slow_frame,
        fast_token=cfg.special_tokens.fast_frame,
    )
    table = build_rope_index_table(layout, times, cfg.rope.temporal_unit_s)
    n_slow = sum(1 for c in classes if c.kind.value == "slow")
    payload = {
        "classes": _classes_payload(classes),
        "plan": {
            "tokens_per_slow": plan.tokens_per_slow,
            "tokens_per_fast": plan.tokens_per_fast,
            "total_tokens": plan.total_tokens,
            "grids": [_grid_payload(g) for g in plan.grids],
        },
        "layout": layout.to_json_obj(),
        "rope_index": table.to_lists(),
        "summary": {
            "mode": "video",
            "n_frames": len(frames),
            "n_slow": n_slow,
            "n_fast": len(frames) - n_slow,
            "tokens_per_slow": plan.tokens_per_slow,
            "tokens_per_fast": plan.tokens_per_fast,
            "total_tokens": plan.total_tokens,
            "budget": cfg.geometry.video_token_budget,
        },
    }
    _write_payload(payload, out_path)


_ITEM_KEYS = {"id", "length_tokens", "modality", "est_cost", "vision_tokens",
              "text_tokens"}


def _load_items(path: Path, cfg: PipelineConfig) -> list[SequenceItem]:
    data = _read_json(path)
    if not isinstance(data, dict) or not isinstance(data.get("items"), list):
        raise InvalidInputError(f'{path}: expected {{"items": [...]}}')
    items = []
    for i, raw in enumerate(data["items"]):
        if not isinstance(raw, dict):
            raise InvalidInputError(f"item {i}: entry must be an object")
        unknown = sorted(set(raw) - _ITEM_KEYS)
        if unknown:
            raise InvalidInputError(f"item {i}: unknown key(s): {', '.join(unknown)}")
        for key in ("id", "length_tokens", "modality"):
            if key not in raw:
                raise InvalidInputError(f"item {i}: missing {key}")
        try:
            modality = Modality(raw["modality"])
        except ValueError:
            raise InvalidInputError(
                f"item {i}: unknown modality {raw['modality']!r}"
            ) from None
        if "est_cost" in raw:
            cost = float(raw["est_cost"])
        else:
            cost = estimate_cost(
                int(raw.get("vision_tokens", 0)),
                int(raw.get("text_tokens", 0)),
                cfg.packing.cost_alpha,
                cfg.packing.cost_beta,
            )
        items.append(
            SequenceItem(
                id=str(raw["id"]),
                length_tokens=int(raw["length_tokens"]),
                modality=modality,
                est_cost=cost,
            )
        )
    return items


@main.command()
@click.option("--items", "items_path", type=Path, required=True,
              help="Sequence items JSON.")
@config_option
@out_option
@_pipeline_command
def pack(items_path: Path, config_path: Optional[Path], out_path: Optional[Path]):
    """Pack items into fixed-capacity context windows (first-fit-decreasing)."""
    cfg = _load_config(config_path)
    windows = pack_windows(_load_items(items_path, cfg), cfg.packing.capacity)
    payload = {
        "windows": [
            {
                "capacity": w.capacity,
                "item_ids": [it.id for it in w.items],
                "lengths": [it.length_tokens for it in w.items],
                "offsets": list(w.offsets),
                "used_tokens": w.used_tokens,
            }
            for w in windows
        ]
    }
    _write_payload(payload, out_path)


@main.command()
@click.option("--items", "items_path", type=Path, required=True,
              help="Sequence items JSON.")
@click.option("--workers", type=int, required=True, help="Worker count.")
@config_option
@out_option
@_pipeline_command
def balance(items_path: Path, workers: int, config_path: Optional[Path],
            out_path: Optional[Path]):
    """Balance items across workers (longest-processing-time-first)."""
    cfg = _load_config(config_path)
    assignment = balance_workers(_load_items(items_path, cfg), workers)
    payload = {
        "assignments": [list(ids) for ids in assignment.assignments],
        "loads": list(assignment.loads),
        "makespan": assignment.makespan,
    }
    _write_payload(payload, out_path)


@main.command("plan")
@click.option("--items", "items_path", type=Path, required=True,
              help="Sequence items JSON.")
@click.option("--workers", type=int, required=True, help="Worker count.")
@config_option
@out_option
@_pipeline_command
def plan_cmd(items_path: Path, workers: int, config_path: Optional[Path],
             out_path: Optional[Path]):
    """Balance items across workers, then pack each worker's share."""
    cfg = _load_config(config_path)
    items = _load_items(items_path, cfg)
    by_id = {}
    for item in items:
        if item.id in by_id:
            raise InvalidInputError(
                f"plan requires unique item ids, {item.id!r} repeats"
            )
        by_id[item.id] = item
    assignment = balance_workers(items, workers)
    worker_payloads = []
    for ids, load in zip(assignment.assignments, assignment.loads):
        windows = pack_windows([by_id[i] for i in ids], cfg.packing.capacity)
        worker_payloads.append(
            {
                "item_ids": list(ids),
                "load": load,
                "windows": [
                    {
                        "capacity": w.capacity,
                        "item_ids": [it.id for it in w.items],
                        "lengths": [it.length_tokens for it in w.items],
                        "offsets": list(w.offsets),
                        "used_tokens": w.used_tokens,
                    }
                    for w in windows
                ],
            }
        )
    payload = {"workers": worker_payloads, "makespan": assignment.makespan}
    _write_payload(payload, out_path)


@main.command()
@click.option("--budget", type=int, required=True, help="Window token budget.")
@click.option("--available", "available_args", multiple=True,
              help="Supply per modality, e.g. --available video=20000.")
@config_option
@out_option
@_pipeline_command
def mixture(budget: int, available_args: tuple[str, ...],
            config_path: Optional[Path], out_path: Optional[Path]):
    """Plan per-modality token targets for one window budget."""
    cfg = _load_config(config_path)
    available: dict[Modality, int] = {}
    for arg in available_args:
        name, sep, value = arg.partition("=")
        if not sep:
            raise InvalidInputError(
                f"--available takes modality=count, got {arg!r}"
            )
        try:
            modality = Modality(name)
        except ValueError:
            raise InvalidInputError(f"unknown modality {name!r}") from None
        try:
            available[modality] = int(value)
        except ValueError:
            raise InvalidInputError(f"count for {name!r} must be an integer") from None
    targets = plan_mixture(available, budget, cfg.packing.fractions)
    payload = {
        "targets": {m.value: t for m, t in targets.items()},
        "window_budget": budget,
    }
    _write_payload(payload, out_path)


def _item_payload(item: GroundingItem) -> dict:
    if item.variant is GroundingVariant.CLIP_TIME:
        payload = [item.payload[0], item.payload[1]]
    elif item.variant is GroundingVariant.OBJECT_REF:
        payload = None
    elif item.variant in (GroundingVariant.POLYGONS, GroundingVariant.OCR_POLYGONS):
        payload = [[list(v) for v in poly] for poly in item.payload]
    else:
        payload = [list(group) for group in item.payload]
    return {"variant": item.variant.value, "payload": payload, "label": item.label}


@main.command()
@click.argument("action", type=click.Choice(["parse", "emit"]))
@click.option("--input", "input_path", type=Path, required=True,
              help="Input file, or - for stdin.")
@click.option("--strict/--lenient", "strict", default=True,
              help="Fail on malformed spans or skip and report them.")
@out_option
@_pipeline_command
def grounding(action: str, input_path: Path, strict: bool,
              out_path: Optional[Path]):
    """Parse grounding markup from text, or emit markup from items JSON."""
    if action == "parse":
        text = _read_text(input_path)
        parsed, issues = scan_grounding(text, strict=strict)
        payload = {
            "items": [
                {**_item_payload(p.item), "char_index": p.char_index}
                for p in parsed
            ],
            "issues": [
                {
                    "reason": issue.reason,
                    "char_index": issue.char_index,
                    "byte_offset": issue.byte_offset,
                }
                for issue in issues
            ],
        }
        _write_payload(payload, out_path)
        return

    data = _read_json(input_path)
    if not isinstance(data, dict) or not isinstance(data.get("items"), list):
        raise InvalidInputError(f'{input_path}: expected {{"items": [...]}}')
    lines = []
    for i, raw in enumerate(data["items"]):
        if not isinstance(raw, dict) or "variant" not in raw:
            raise InvalidInputError(f"item {i}: entry must be an object with a variant")
        unknown = sorted(set(raw) - {"variant", "payload", "label"})
        if unknown:
            raise InvalidInputError(f"item {i}: unknown key(s): {', '.join(unknown)}")
        try:
            variant = GroundingVariant(raw["variant"])
        except ValueError:
            raise InvalidInputError(
                f"item {i}: unknown variant {raw['variant']!r}"
            ) from None
        item = GroundingItem(variant, raw.get("payload"), raw.get("label"))
        lines.append(emit_grounding(item))
    _write_text("\n".join(lines) + "\n", out_path)


@main.command("gspo-eval")
@click.option("--batch", "batch_path", type=Path, required=True,
              help="Batch JSON with a list of rollout groups.")
@out_option
@_pipeline_command
def gspo_eval(batch_path: Path, out_path: Optional[Path]):
    """Evaluate the clipped sequence-level objective for rollout groups."""
    data = _read_json(batch_path)
    if not isinstance(data, dict) or not isinstance(data.get("groups"), list):
        raise InvalidInputError(f'{batch_path}: expected {{"groups": [...]}}')
    if not data["groups"]:
        raise InvalidInputError("batch holds no groups")
    group_payloads = []
    objectives = []
    for i, raw in enumerate(data["groups"]):
        if not isinstance(raw, dict):
            raise InvalidInputError(f"group {i}: entry must be an object")
        unknown = sorted(
            set(raw) - {"rewards", "token_logprobs_new", "token_logprobs_old",
                        "clip_eps"}
        )
        if unknown:
            raise InvalidInputError(f"group {i}: unknown key(s): {', '.join(unknown)}")
        try:
            rollouts = GroupRollouts(
                rewards=tuple(raw["rewards"]),
                token_logprobs_new=tuple(tuple(r) for r in raw["token_logprobs_new"]),
                token_logprobs_old=tuple(tuple(r) for r in raw["token_logprobs_old"]),
                clip_eps=raw.get("clip_eps", DEFAULT_CLIP_EPS),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"group {i}: {exc}") from None
        result = gspo_objective(rollouts)
        objectives.append(result.objective)
        group_payloads.append(
            {
                "advantages": list(result.advantages),
                "ratios": list(result.ratios),
                "clipped_terms": list(result.clipped_terms),
                "objective": result.objective,
            }
        )
    payload = {
        "groups": group_payloads,
        "batch_objective": math.fsum(objectives) / len(objectives),
    }
    _write_payload(payload, out_path)


if __name__ == "__main__":
    main()
