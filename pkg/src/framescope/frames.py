"""The six-way narrative frame taxonomy used across the pipeline."""
from __future__ import annotations

from enum import Enum


class Frame(str, Enum):
    SOCIAL = "social"
    HEALTH = "health"
    LEGAL = "legal"
    FINANCIAL = "financial"
    SECURITY = "security"
    MORAL = "moral"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


FRAMES: tuple[Frame, ...] = tuple(Frame)
FRAME_NAMES: tuple[str, ...] = tuple(f.value for f in Frame)

# One-line working definitions, used by the prompt template and the UI.
FRAME_DEFINITIONS: dict[Frame, str] = {
    Frame.SOCIAL: "community, relationships, identity, culture, or everyday life",
    Frame.HEALTH: "physical or mental health, illness, treatment, or public health",
    Frame.LEGAL: "laws, courts, rights, regulation, or judicial processes",
    Frame.FINANCIAL: "money, markets, business, costs, or economic consequences",
    Frame.SECURITY: "safety, threat, crime, conflict, or defense",
    Frame.MORAL: "right and wrong, virtue, faith, or ethical judgment",
}


def parse_frame(value: str) -> Frame:
    """Case-insensitive frame lookup; raises ValueError for unknown labels."""
    try:
        return Frame(value.strip().lower())
    except ValueError:
        raise ValueError(f"unknown frame label: {value!r}") from None
