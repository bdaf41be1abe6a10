"""Curation rules applied to dataset entries.

Each rule inspects one entry (and its loaded frames) and decides whether it
stays in the dataset. Rules are applied in order; the first rule that
rejects an entry is the one credited in the report.
"""

from abc import ABC, abstractmethod

import numpy as np

from .schemas import ManifestEntry, RGBAVideo


class FilterRule(ABC):
    """Base class for curation rules."""

    name: str = "rule"

    @abstractmethod
    def rejects(self, entry: ManifestEntry, video: RGBAVideo) -> bool:
        """
        Decide whether an entry is removed.

        Args:
            entry: Manifest record
            video: Frames loaded from the entry's directory

        Returns:
            True when the entry violates the rule
        """
        pass


class WhiteAlphaRule(FilterRule):
    """
    Remove entries whose alpha is entirely white (fully opaque everywhere).

    Such clips carry no transparency and teach the alpha decoder nothing.
    """

    name = "white-alpha"

    def rejects(self, entry: ManifestEntry, video: RGBAVideo) -> bool:
        return bool(np.all(video.alpha >= 1.0))


class MinResolutionRule(FilterRule):
    """Remove entries whose shorter side is below a floor."""

    name = "min-resolution"

    def __init__(self, floor: int):
        self.floor = floor

    def rejects(self, entry: ManifestEntry, video: RGBAVideo) -> bool:
        return min(video.height, video.width) < self.floor


def default_rules(min_resolution: int) -> list[FilterRule]:
    return [WhiteAlphaRule(), MinResolutionRule(min_resolution)]
