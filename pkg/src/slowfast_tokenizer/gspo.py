"""Numeric kernel for the group-sequence policy objective.

Given one group of sampled responses with scalar rewards and per-token log
probabilities under the new and old policies, this computes group-normalized
advantages, length-normalized sequence likelihood ratios, the clipped
surrogate terms, and their mean.  Values only; no gradients and no model.

All reductions use ``math.fsum`` so results are exactly invariant under
permutation of group members and of tokens within a response.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import InvalidInputError

DEFAULT_CLIP_EPS = 0.2


def group_advantages(rewards: Sequence[float]) -> list[float]:
    """Rewards standardized within the group: (r - mean) / population std.

    A zero-variance group yields all-zero advantages.
    """
    values = [float(r) for r in rewards]
    if len(values) < 2:
        raise InvalidInputError(
            f"a group needs at least 2 rewards, got {len(values)}"
        )
    if any(not math.isfinite(v) for v in values):
        raise InvalidInputError("rewards must be finite")
    n = len(values)
    mean = math.fsum(values) / n
    std = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / n)
    if std == 0.0:
        return [0.0] * n
    return [(v - mean) / std for v in values]


def sequence_ratio(lp_new: Sequence[float], lp_old: Sequence[float]) -> float:
    """Length-normalized likelihood ratio: exp(mean per-token log ratio)."""
    if len(lp_new) != len(lp_old):
        raise InvalidInputError(
            f"log-probability lengths differ: {len(lp_new)} vs {len(lp_old)}"
        )
    if len(lp_new) < 1:
        raise InvalidInputError("a response needs at least one token")
    diffs = [float(a) - float(b) for a, b in zip(lp_new, lp_old)]
    if any(not math.isfinite(d) for d in diffs):
        raise InvalidInputError("log-probabilities must be finite")
    return math.exp(math.fsum(diffs) / len(diffs))


@dataclass(frozen=True)
class GroupRollouts:
    """One group's rewards and per-token log-probs under both policies."""

    rewards: tuple[float, ...]
    token_logprobs_new: tuple[tuple[float, ...], ...]
    token_logprobs_old: tuple[tuple[float, ...], ...]
    clip_eps: float = DEFAULT_CLIP_EPS

    def __post_init__(self):
        rewards = tuple(float(r) for r in self.rewards)
        lp_new = tuple(tuple(float(v) for v in row) for row in self.token_logprobs_new)
        lp_old = tuple(tuple(float(v) for v in row) for row in self.token_logprobs_old)
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(self, "token_logprobs_new", lp_new)
        object.__setattr__(self, "token_logprobs_old", lp_old)
        g = len(rewards)
        if g < 2:
            raise InvalidInputError(f"group size must be >= 2, got {g}")
        if len(lp_new) != g or len(lp_old) != g:
            raise InvalidInputError(
                f"need one log-probability vector per response: group size {g}, "
                f"got {len(lp_new)} new and {len(lp_old)} old"
            )
        for i, (new_row, old_row) in enumerate(zip(lp_new, lp_old)):
            if len(new_row) != len(old_row):
                raise InvalidInputError(
                    f"response {i}: new/old log-probability lengths differ "
                    f"({len(new_row)} vs {len(old_row)})"
                )
            if len(new_row) < 1:
                raise InvalidInputError(f"response {i} has no tokens")
            for v in new_row + old_row:
                if not (math.isfinite(v) and v <= 0.0):
                    raise InvalidInputError(
                        f"response {i}: log-probabilities must be finite and "
                        f"<= 0, got {v!r}"
                    )
        if any(not math.isfinite(r) for r in rewards):
            raise InvalidInputError("rewards must be finite")
        if not (math.isfinite(self.clip_eps) and self.clip_eps > 0):
            raise InvalidInputError(
                f"clip_eps must be a finite positive number, got {self.clip_eps!r}"
            )

    @property
    def group_size(self) -> int:
        return len(self.rewards)


@dataclass(frozen=True)
class GspoResult:
    """All intermediates of one group evaluation plus the objective."""

    advantages: tuple[float, ...]
    ratios: tuple[float, ...]
    clipped_terms: tuple[float, ...]
    objective: float


def gspo_objective(rollouts: GroupRollouts) -> GspoResult:
    """Mean over the group of min(s * A, clip(s, 1-eps, 1+eps) * A)."""
    eps = rollouts.clip_eps
    advantages = group_advantages(rollouts.rewards)
    ratios = [
        sequence_ratio(new_row, old_row)
        for new_row, old_row in zip(
            rollouts.token_logprobs_new, rollouts.token_logprobs_old
        )
    ]
    terms = [
        min(s * a, min(max(s, 1.0 - eps), 1.0 + eps) * a)
        for s, a in zip(ratios, advantages)
    ]
    objective = math.fsum(terms) / rollouts.group_size
    return GspoResult(
        advantages=tuple(advantages),
        ratios=tuple(ratios),
        clipped_terms=tuple(terms),
        objective=objective,
    )
