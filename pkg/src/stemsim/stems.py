"""Stem vocabulary and channel configurations.

A configuration is an ordered list of channels. Separated stems come first
and the full mixture is always the final channel, so weight vectors, feature
vectors, and preset files all share one canonical ordering.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import ConfigMismatch, InvalidStem


class StemKind(str, enum.Enum):
    """Known channel names, in canonical display order."""

    BASS = "bass"
    DRUMS = "drums"
    GUITAR = "guitar"
    PIANO = "piano"
    VOCALS = "vocals"
    RESIDUALS = "residuals"
    MIX = "mix"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


_STEM_BY_NAME = {kind.value: kind for kind in StemKind}
# canonical position of each stem, used for deterministic report ordering
STEM_ORDER = {kind.value: i for i, kind in enumerate(StemKind)}


def parse_stem(name: str) -> StemKind:
    """Return the :class:`StemKind` for ``name``.

    Raises:
        InvalidStem: if ``name`` is not a known channel.
    """
    try:
        return _STEM_BY_NAME[name]
    except KeyError:
        known = ", ".join(sorted(_STEM_BY_NAME))
        raise InvalidStem(f"unknown stem {name!r}, expected one of: {known}") from None


@dataclass(frozen=True)
class StemConfig:
    """An ordered channel layout.

    Attributes:
        name: registry key, e.g. ``"six_stem"``.
        channels: channel names in canonical order, mixture last.
    """

    name: str
    channels: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.channels:
            raise ConfigMismatch(f"config {self.name!r} has no channels")
        if len(set(self.channels)) != len(self.channels):
            raise ConfigMismatch(f"config {self.name!r} repeats a channel")
        for ch in self.channels:
            parse_stem(ch)
        if self.channels[-1] != StemKind.MIX.value:
            raise ConfigMismatch(
                f"config {self.name!r} must end with the mix channel"
            )
        if StemKind.MIX.value in self.channels[:-1]:
            raise ConfigMismatch(f"config {self.name!r} lists mix twice")

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    @property
    def stems(self) -> tuple[str, ...]:
        """Separated channels only, the mixture excluded."""
        return self.channels[:-1]

    def index_of(self, stem: str) -> int:
        """Position of ``stem`` in the channel order.

        Raises:
            InvalidStem: if the stem is not part of this configuration.
        """
        try:
            return self.channels.index(stem)
        except ValueError:
            raise InvalidStem(
                f"stem {stem!r} is not part of config {self.name!r}"
            ) from None


FOUR_STEM = StemConfig(
    name="four_stem",
    channels=("bass", "drums", "vocals", "residuals", "mix"),
)

SIX_STEM = StemConfig(
    name="six_stem",
    channels=("bass", "drums", "guitar", "piano", "vocals", "residuals", "mix"),
)

_CONFIGS = {cfg.name: cfg for cfg in (FOUR_STEM, SIX_STEM)}


def get_stem_config(name: str) -> StemConfig:
    """Look up a registered configuration by name.

    Raises:
        ConfigMismatch: if ``name`` is not registered.
    """
    try:
        return _CONFIGS[name]
    except KeyError:
        known = ", ".join(sorted(_CONFIGS))
        raise ConfigMismatch(
            f"unknown config {name!r}, expected one of: {known}"
        ) from None


def config_names() -> tuple[str, ...]:
    return tuple(sorted(_CONFIGS))
