"""Named per-stem weight vectors and their file format.

A preset file is UTF-8, tab separated, one entry per line. Header lines
carry the provenance keys (config, encoder, source, method, lambda),
followed by one "stem <tab> weight" line per channel in configuration
order. Lines starting with '#' are comments. Weights are written with
``repr`` so a save/load cycle is bitwise exact. A preset's name is not
stored in the file; it comes from the file name (or the built-in registry).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import PresetParseError
from .stems import StemConfig, StemKind, get_stem_config
from .validation import as_vector, check_non_negative

PRESET_SUFFIX = ".preset"
BUILTIN_MIX_ONLY = "mix-only"
BUILTIN_UNIFORM = "uniform"
BUILTIN_METHOD = "builtin"

_HEADER_KEYS = ("config", "encoder", "source", "method", "lambda")
_STEM_NAMES = {kind.value for kind in StemKind}


@dataclass(frozen=True)
class WeightPreset:
    """A named weight vector with the provenance of its fit.

    ``weights`` maps every channel of ``config`` to its weight. ``method``
    is "ols", "ridge", "builtin", or "manual"; ``alpha`` is the ridge
    penalty used (0.0 when not applicable).
    """

    name: str
    config: StemConfig
    weights: dict[str, float]
    encoder_id: str = ""
    source: str = ""
    method: str = "manual"
    alpha: float = 0.0

    def __post_init__(self) -> None:
        check_non_negative(self.alpha, "alpha")
        ordered = {}
        for ch in self.config.channels:
            if ch not in self.weights:
                raise PresetParseError(
                    f"preset {self.name!r} is missing a weight for {ch!r}"
                )
            ordered[ch] = float(self.weights[ch])
        extra = set(self.weights) - set(self.config.channels)
        if extra:
            raise PresetParseError(
                f"preset {self.name!r} has weights for stems outside "
                f"config {self.config.name!r}: " + ", ".join(sorted(extra))
            )
        as_vector(list(ordered.values()), f"preset {self.name!r} weights")
        object.__setattr__(self, "weights", ordered)

    def vector(self) -> np.ndarray:
        """Weights as a float64 array in configuration channel order."""
        return np.array(
            [self.weights[ch] for ch in self.config.channels], dtype=np.float64
        )


def save_preset(path: str | Path, preset: WeightPreset) -> None:
    """Write a preset file atomically."""
    lines = [
        f"config\t{preset.config.name}",
        f"encoder\t{preset.encoder_id}",
        f"source\t{preset.source}",
        f"method\t{preset.method}",
        f"lambda\t{repr(float(preset.alpha))}",
    ]
    for ch in preset.config.channels:
        lines.append(f"{ch}\t{repr(float(preset.weights[ch]))}")
    out = Path(path)
    tmp = out.with_name(out.name + ".tmp")
    tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
    os.replace(tmp, out)


def load_preset(path: str | Path, name: str | None = None) -> WeightPreset:
    """Parse a preset file.

    Args:
        path: preset file location.
        name: preset name; defaults to the file name without suffix.

    Raises:
        PresetParseError: structural problems, unknown keys, missing or
            repeated channels, or a config/channel disagreement. Offending
            1-based line numbers are attached.
    """
    p = Path(path)
    text = p.read_text(encoding="utf-8")
    if name is None:
        name = p.stem

    headers: dict[str, str] = {}
    raw_weights: dict[str, float] = {}
    bad: list[tuple[int, str]] = []
    for lineno, rawline in enumerate(text.split("\n"), start=1):
        line = rawline.strip()
        if not line or line.startswith("#"):
            continue
        parts = rawline.split("\t")
        if len(parts) != 2:
            bad.append((lineno, f"expected 'key<TAB>value', got {line!r}"))
            continue
        key, value = parts[0], parts[1]
        if key in _HEADER_KEYS:
            if key in headers:
                bad.append((lineno, f"repeated key {key!r}"))
                continue
            headers[key] = value
        elif key in _STEM_NAMES:
            if key in raw_weights:
                bad.append((lineno, f"repeated stem {key!r}"))
                continue
            try:
                raw_weights[key] = float(value)
            except ValueError:
                bad.append((lineno, f"weight for {key!r} is not a number: {value!r}"))
        else:
            bad.append((lineno, f"unknown key {key!r}"))
    if bad:
        detail = "; ".join(f"line {n}: {msg}" for n, msg in bad)
        raise PresetParseError(
            f"{path}: malformed preset: {detail}",
            line_numbers=[n for n, _ in bad],
        )
    if "config" not in headers:
        raise PresetParseError(f"{path}: preset has no 'config' line")
    try:
        config = get_stem_config(headers["config"])
    except Exception as exc:
        raise PresetParseError(f"{path}: {exc}") from None
    try:
        alpha = float(headers.get("lambda", "0.0"))
    except ValueError:
        raise PresetParseError(
            f"{path}: lambda is not a number: {headers['lambda']!r}"
        ) from None
    try:
        return WeightPreset(
            name=name,
            config=config,
            weights=raw_weights,
            encoder_id=headers.get("encoder", ""),
            source=headers.get("source", ""),
            method=headers.get("method", "manual"),
            alpha=alpha,
        )
    except PresetParseError as exc:
        raise PresetParseError(f"{path}: {exc}") from None


def builtin_presets(config: StemConfig) -> list[WeightPreset]:
    """The two presets every installation has.

    "mix-only" is one-hot on the mixture channel and reproduces the plain
    cosine baseline; "uniform" weighs every channel equally.
    """
    mix_only = {ch: 0.0 for ch in config.channels}
    mix_only[StemKind.MIX.value] = 1.0
    uniform = {ch: 1.0 for ch in config.channels}
    return [
        WeightPreset(
            name=BUILTIN_MIX_ONLY,
            config=config,
            weights=mix_only,
            method=BUILTIN_METHOD,
        ),
        WeightPreset(
            name=BUILTIN_UNIFORM,
            config=config,
            weights=uniform,
            method=BUILTIN_METHOD,
        ),
    ]


def load_preset_dir(directory: str | Path, config: StemConfig) -> list[WeightPreset]:
    """Load every ``*.preset`` file in ``directory`` matching ``config``.

    Files for other stem configurations are skipped (they are valid files,
    just not applicable). Results are sorted by preset name. Missing
    directories yield an empty list.

    Raises:
        PresetParseError: any file that fails to parse.
    """
    d = Path(directory)
    if not d.is_dir():
        return []
    presets = []
    for path in sorted(d.glob("*" + PRESET_SUFFIX)):
        preset = load_preset(path)
        if preset.config.name == config.name:
            presets.append(preset)
    return presets


def resolve_preset(
    name_or_path: str,
    config: StemConfig,
    preset_dir: str | Path | None = None,
) -> WeightPreset:
    """Find a preset by built-in name, file path, or name in a directory.

    Raises:
        PresetParseError: nothing matches, or the match is for a
            different stem configuration.
    """
    for preset in builtin_presets(config):
        if preset.name == name_or_path:
            return preset
    candidate = Path(name_or_path)
    if candidate.is_file():
        preset = load_preset(candidate)
    elif preset_dir is not None:
        candidate = Path(preset_dir) / (name_or_path + PRESET_SUFFIX)
        if not candidate.is_file():
            raise PresetParseError(
                f"no preset named {name_or_path!r} (looked for {candidate})"
            )
        preset = load_preset(candidate)
    else:
        raise PresetParseError(f"no preset named {name_or_path!r}")
    if preset.config.name != config.name:
        raise PresetParseError(
            f"preset {preset.name!r} is for config {preset.config.name!r}, "
            f"active config is {config.name!r}"
        )
    return preset


def preset_from_weights(
    name: str,
    config: StemConfig,
    weights: Mapping[str, float] | np.ndarray,
    encoder_id: str = "",
    source: str = "",
    method: str = "manual",
    alpha: float = 0.0,
) -> WeightPreset:
    """Build a preset from a mapping or a config-ordered weight array."""
    if isinstance(weights, Mapping):
        mapping = {ch: float(w) for ch, w in weights.items()}
    else:
        arr = as_vector(weights, "weights", dim=config.n_channels)
        mapping = {ch: float(arr[i]) for i, ch in enumerate(config.channels)}
    return WeightPreset(
        name=name,
        config=config,
        weights=mapping,
        encoder_id=encoder_id,
        source=source,
        method=method,
        alpha=alpha,
    )
