"""Cost bookkeeping shared by the expansion and answering stages."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class CostEntry:
    """Backend usage for one stage of one question.

    ``output_tokens`` is backend-reported when available, otherwise estimated
    as ceil(characters / 4) of the generated text. ``wall_ms`` is zero until a
    driver stamps it.
    """

    llm_calls: int = 0
    output_tokens: int = 0
    wall_ms: int = 0

    def __post_init__(self) -> None:
        if self.llm_calls < 0 or self.output_tokens < 0 or self.wall_ms < 0:
            raise ValueError("cost fields must be nonnegative")
        if self.llm_calls == 0 and self.output_tokens != 0:
            raise ValueError("zero calls cannot produce output tokens")
