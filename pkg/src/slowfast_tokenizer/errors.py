"""Exception types shared across the package."""

from __future__ import annotations


class PipelineError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(PipelineError, ValueError):
    """An argument or input record violates a documented precondition."""


class InvalidConfigError(InvalidInputError):
    """A configuration value is out of range or internally inconsistent."""


class BudgetTooSmallError(PipelineError):
    """The video token budget cannot fit even the minimum per-frame plan."""

    def __init__(self, budget: int, min_total: int):
        super().__init__(
            f"token budget {budget} is below the minimum achievable total "
            f"of {min_total}"
        )
        self.budget = budget
        self.min_total = min_total


class OversizeItemError(InvalidInputError):
    """A sequence item is longer than the packing window capacity."""

    def __init__(self, item_id: str, length_tokens: int, capacity: int):
        super().__init__(
            f"item {item_id!r} is {length_tokens} tokens long, which exceeds "
            f"the window capacity of {capacity}"
        )
        self.item_id = item_id
        self.length_tokens = length_tokens
        self.capacity = capacity


class InfeasibleMixtureError(PipelineError):
    """Available tokens cannot fill the requested window budget."""

    def __init__(self, budget: int, achievable: int):
        super().__init__(
            f"mixture budget {budget} exceeds the achievable total of "
            f"{achievable} tokens"
        )
        self.budget = budget
        self.achievable = achievable


class GroundingParseError(PipelineError):
    """Grounding markup could not be parsed in strict mode."""

    def __init__(self, reason: str, char_index: int, byte_offset: int):
        super().__init__(f"{reason} (byte offset {byte_offset})")
        self.reason = reason
        self.char_index = char_index
        self.byte_offset = byte_offset
