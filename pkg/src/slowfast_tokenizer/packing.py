"""Context-window packing, token-mixture planning, and worker balancing.

Packing is first-fit-decreasing by item length; balancing is
longest-processing-time-first onto the least-loaded worker.  Both use
documented tie-breaks (input position, then item id, then lowest worker
index) so plans are deterministic given input order.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Optional

from .errors import InfeasibleMixtureError, InvalidInputError, OversizeItemError


class Modality(Enum):
    VIDEO = "video"
    IMAGE = "image"
    TEXT = "text"


DEFAULT_MIXTURE_FRACTIONS: dict[Modality, float] = {
    Modality.VIDEO: 0.24,
    Modality.IMAGE: 0.50,
    Modality.TEXT: 0.26,
}
DEFAULT_COST_ALPHA = 2.0
DEFAULT_COST_BETA = 1.0


def estimate_cost(
    vision_tokens: int = 0,
    text_tokens: int = 0,
    alpha: float = DEFAULT_COST_ALPHA,
    beta: float = DEFAULT_COST_BETA,
) -> float:
    """Default work estimate: alpha * vision tokens + beta * text tokens."""
    if vision_tokens < 0 or text_tokens < 0:
        raise InvalidInputError("token counts must be >= 0")
    return alpha * vision_tokens + beta * text_tokens


@dataclass(frozen=True)
class SequenceItem:
    """One packable sample: token length, modality, estimated work."""

    id: str
    length_tokens: int
    modality: Modality
    est_cost: float = 0.0

    def __post_init__(self):
        if not self.id:
            raise InvalidInputError("item id must be non-empty")
        if self.length_tokens < 1:
            raise InvalidInputError(
                f"item {self.id!r}: length_tokens must be >= 1, "
                f"got {self.length_tokens}"
            )
        if not (math.isfinite(self.est_cost) and self.est_cost >= 0):
            raise InvalidInputError(
                f"item {self.id!r}: est_cost must be finite and >= 0, "
                f"got {self.est_cost!r}"
            )


@dataclass(frozen=True)
class PackedWindow:
    """One fixed-capacity window: items in insertion order plus layout."""

    capacity: int
    items: tuple[SequenceItem, ...]
    offsets: tuple[int, ...]
    segment_ids: tuple[int, ...]

    @property
    def used_tokens(self) -> int:
        return sum(it.length_tokens for it in self.items)


def pack_windows(
    items: Iterable[SequenceItem], capacity: int
) -> list[PackedWindow]:
    """First-fit-decreasing packing into windows of ``capacity`` tokens.

    Items are placed longest first (ties keep input order) into the first
    window with room; windows come out in creation order.
    """
    seq = list(items)
    if capacity < 1:
        raise InvalidInputError(f"capacity must be >= 1, got {capacity}")
    for item in seq:
        if item.length_tokens > capacity:
            raise OversizeItemError(item.id, item.length_tokens, capacity)
    order = sorted(range(len(seq)), key=lambda i: (-seq[i].length_tokens, i))
    bins: list[list[int]] = []
    residual: list[int] = []
    for idx in order:
        need = seq[idx].length_tokens
        for b, room in enumerate(residual):
            if room >= need:
                bins[b].append(idx)
                residual[b] -= need
                break
        else:
            bins.append([idx])
            residual.append(capacity - need)
    windows = []
    for members in bins:
        chosen = tuple(seq[i] for i in members)
        offsets = []
        segment_ids = []
        cursor = 0
        for seg, item in enumerate(chosen):
            offsets.append(cursor)
            segment_ids.extend([seg] * item.length_tokens)
            cursor += item.length_tokens
        windows.append(
            PackedWindow(capacity, chosen, tuple(offsets), tuple(segment_ids))
        )
    return windows


def _largest_remainder(
    raw: dict[Modality, float], total: int
) -> dict[Modality, int]:
    floors = {m: int(math.floor(v)) for m, v in raw.items()}
    leftover = total - sum(floors.values())
    order = sorted(
        raw,
        key=lambda m: (-(raw[m] - floors[m]), list(Modality).index(m)),
    )
    out = dict(floors)
    for m in order:
        if leftover <= 0:
            break
        out[m] += 1
        leftover -= 1
    return out


def plan_mixture(
    available: Mapping[Modality, int],
    window_budget: int,
    fractions: Optional[Mapping[Modality, float]] = None,
) -> dict[Modality, int]:
    """Per-modality token targets summing exactly to ``window_budget``.

    Targets are ``fraction * budget`` rounded with the largest-remainder
    method, then capped by availability with the shortfall redistributed
    proportionally among the uncapped modalities.
    """
    if fractions is None:
        fractions = DEFAULT_MIXTURE_FRACTIONS
    if window_budget < 1:
        raise InvalidInputError(f"window_budget must be >= 1, got {window_budget}")
    fracs = {m: float(fractions[m]) for m in Modality if m in fractions}
    if not fracs:
        raise InvalidInputError("fractions must name at least one modality")
    if any(not (math.isfinite(f) and f >= 0) for f in fracs.values()):
        raise InvalidInputError(f"fractions must be finite and >= 0, got {fracs}")
    if abs(math.fsum(fracs.values()) - 1.0) > 1e-9:
        raise InvalidInputError(
            f"fractions must sum to 1 within 1e-9, got {math.fsum(fracs.values())}"
        )
    supply = {m: int(available.get(m, 0)) for m in fracs}
    if any(s < 0 for s in supply.values()):
        raise InvalidInputError(f"availability must be >= 0, got {supply}")

    achievable = sum(supply[m] for m in fracs if fracs[m] > 0)
    if achievable < window_budget:
        raise InfeasibleMixtureError(window_budget, achievable)

    targets = {m: 0 for m in fracs}
    uncapped = [m for m in fracs if fracs[m] > 0]
    remaining = window_budget
    while uncapped and remaining > 0:
        weight = math.fsum(fracs[m] for m in uncapped)
        raw = {m: fracs[m] / weight * remaining for m in uncapped}
        round_targets = _largest_remainder(raw, remaining)
        over = [m for m in uncapped if round_targets[m] > supply[m]]
        if not over:
            targets.update(round_targets)
            break
        for m in over:
            targets[m] = supply[m]
            remaining -= supply[m]
            uncapped.remove(m)
    return targets


@dataclass(frozen=True)
class WorkerAssignment:
    """Item ids per worker plus the recomputed per-worker load sums."""

    assignments: tuple[tuple[str, ...], ...]
    loads: tuple[float, ...]

    @property
    def makespan(self) -> float:
        return max(self.loads) if self.loads else 0.0


def balance_workers(
    items: Iterable[SequenceItem], n_workers: int
) -> WorkerAssignment:
    """Longest-processing-time-first assignment to the least-loaded worker.

    Items are taken by descending ``est_cost`` (ties by id) and each goes to
    the worker with the lowest current load (ties by lowest worker index).
    """
    if n_workers < 1:
        raise InvalidInputError(f"n_workers must be >= 1, got {n_workers}")
    seq = sorted(items, key=lambda it: (-it.est_cost, it.id))
    heap: list[tuple[float, int]] = [(0.0, w) for w in range(n_workers)]
    member_costs: list[list[float]] = [[] for _ in range(n_workers)]
    member_ids: list[list[str]] = [[] for _ in range(n_workers)]
    for item in seq:
        load, worker = heapq.heappop(heap)
        member_ids[worker].append(item.id)
        member_costs[worker].append(item.est_cost)
        heapq.heappush(heap, (load + item.est_cost, worker))
    loads = tuple(math.fsum(costs) for costs in member_costs)
    return WorkerAssignment(tuple(tuple(ids) for ids in member_ids), loads)
