"""Position-frequency maps and encoding schemes.

A scheme fixes how image geometry becomes sound: which tone frequency each
image row drives (the position-frequency map), how long one left-to-right
scan lasts, the synthesis sample rate, and the amplitude crossfade between
adjacent columns.

Height indices run from the BOTTOM of the image: i = 0 is the bottom row,
i = rows - 1 the top row, so frequency increases with height and the top of
the image carries the highest pitch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path


def _check_height_args(i: float, rows: int) -> None:
    if rows < 2:
        raise ValueError(f"rows must be >= 2, got {rows}")
    if not 0 <= i <= rows - 1:
        raise ValueError(f"height index {i} outside [0, {rows - 1}]")


@dataclass(frozen=True)
class ExponentialMap:
    """Geometric frequency ladder from f_min (bottom row) to f_max (top row)."""

    f_min: float
    f_max: float

    def __post_init__(self):
        if not 0 < self.f_min < self.f_max:
            raise ValueError(f"need 0 < f_min < f_max, got [{self.f_min}, {self.f_max}]")

    def frequency(self, i: float, rows: int) -> float:
        _check_height_args(i, rows)
        return self.f_min * (self.f_max / self.f_min) ** (i / (rows - 1))

    def position(self, f: float, rows: int) -> float:
        """Inverse of frequency(): the real-valued height index emitting f."""
        if rows < 2:
            raise ValueError(f"rows must be >= 2, got {rows}")
        if not self.f_min <= f <= self.f_max:
            raise ValueError(f"{f} Hz outside attainable range [{self.f_min}, {self.f_max}]")
        return (rows - 1) * math.log(f / self.f_min) / math.log(self.f_max / self.f_min)


@dataclass(frozen=True)
class RectifiedTanhMap:
    """Shifted tanh map concentrating central rows in mid frequencies.

    range_hz is the total frequency span (output stays strictly inside
    (0, range_hz)); steepness scales how fast frequency sweeps through the
    middle rows relative to the compressed extremes.
    """

    range_hz: float
    steepness: float

    def __post_init__(self):
        if self.range_hz <= 0:
            raise ValueError(f"range_hz must be positive, got {self.range_hz}")
        if self.steepness <= 0:
            raise ValueError(f"steepness must be positive, got {self.steepness}")

    def frequency(self, i: float, rows: int) -> float:
        _check_height_args(i, rows)
        half = self.range_hz / 2
        return half * math.tanh(self.steepness * (i - rows / 2)) + half

    def position(self, f: float, rows: int) -> float:
        """Inverse of frequency(): the real-valued height index emitting f."""
        if rows < 2:
            raise ValueError(f"rows must be >= 2, got {rows}")
        lo, hi = self.frequency(0, rows), self.frequency(rows - 1, rows)
        if not lo <= f <= hi:
            raise ValueError(f"{f} Hz outside attainable range [{lo}, {hi}]")
        half = self.range_hz / 2
        return math.atanh(f / half - 1.0) / self.steepness + rows / 2


PositionFrequencyMap = ExponentialMap | RectifiedTanhMap


@dataclass(frozen=True)
class EncodingScheme:
    """Full image-to-sound translation recipe."""

    name: str
    pf: PositionFrequencyMap
    duration_s: float
    sample_rate_hz: int = 16000
    crossfade_fraction: float = 0.1

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValueError(f"duration_s must be positive, got {self.duration_s}")
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if not 0 <= self.crossfade_fraction < 0.5:
            raise ValueError(
                f"crossfade_fraction must lie in [0, 0.5), got {self.crossfade_fraction}"
            )

    def with_name(self, name: str) -> "EncodingScheme":
        return replace(self, name=name)


# Reference presets. PRIMARY mirrors the stock translation (exponential map,
# 1.05 s scan), LONG doubles the scan time, TANH swaps in the rectified-tanh
# map that pushes central rows into the 2-5 kHz band where hearing is most
# sensitive (for the 64-row reference geometry).
PRESETS: dict[str, EncodingScheme] = {
    "primary": EncodingScheme("primary", ExponentialMap(500.0, 5000.0), 1.05),
    "long": EncodingScheme("long", ExponentialMap(500.0, 5000.0), 2.0),
    "tanh": EncodingScheme("tanh", RectifiedTanhMap(7000.0, 0.035), 1.05),
}

_PF_KINDS = {"exponential": ExponentialMap, "rectified-tanh": RectifiedTanhMap}
_PF_FIELDS = {
    ExponentialMap: ("f_min", "f_max"),
    RectifiedTanhMap: ("range_hz", "steepness"),
}


def get_preset(name: str) -> EncodingScheme:
    try:
        return PRESETS[name.lower()]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; have {sorted(PRESETS)}") from None


def scheme_to_text(scheme: EncodingScheme) -> str:
    """Serialize a scheme as the documented `key = value` document."""
    kind = {ExponentialMap: "exponential", RectifiedTanhMap: "rectified-tanh"}[type(scheme.pf)]
    lines = [f"name = {scheme.name}", f"pf.kind = {kind}"]
    for field_name in _PF_FIELDS[type(scheme.pf)]:
        lines.append(f"pf.{field_name} = {getattr(scheme.pf, field_name)!r}")
    lines += [
        f"duration_s = {scheme.duration_s!r}",
        f"sample_rate_hz = {scheme.sample_rate_hz}",
        f"crossfade_fraction = {scheme.crossfade_fraction!r}",
    ]
    return "\n".join(lines) + "\n"


def scheme_from_text(text: str) -> EncodingScheme:
    """Parse a `key = value` scheme document (inverse of scheme_to_text)."""
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        entries[key.strip()] = value.strip()

    for required in ("name", "pf.kind", "duration_s"):
        if required not in entries:
            raise ValueError(f"scheme document missing key {required!r}")
    kind = entries["pf.kind"]
    if kind not in _PF_KINDS:
        raise ValueError(f"unknown pf.kind {kind!r}; have {sorted(_PF_KINDS)}")
    pf_cls = _PF_KINDS[kind]
    try:
        pf_args = {name: float(entries[f"pf.{name}"]) for name in _PF_FIELDS[pf_cls]}
    except KeyError as exc:
        raise ValueError(f"scheme document missing pf parameter {exc}") from None
    return EncodingScheme(
        name=entries["name"],
        pf=pf_cls(**pf_args),
        duration_s=float(entries["duration_s"]),
        sample_rate_hz=int(entries.get("sample_rate_hz", "16000")),
        crossfade_fraction=float(entries.get("crossfade_fraction", "0.1")),
    )


def scheme_write(scheme: EncodingScheme, path) -> None:
    Path(path).write_text(scheme_to_text(scheme), encoding="ascii")


def scheme_read(path) -> EncodingScheme:
    return scheme_from_text(Path(path).read_text(encoding="ascii"))


def load_scheme(spec: str) -> EncodingScheme:
    """Resolve a CLI-style scheme reference: preset name or path to a file."""
    if spec.lower() in PRESETS:
        return PRESETS[spec.lower()]
    path = Path(spec)
    if path.exists():
        return scheme_read(path)
    raise ValueError(f"{spec!r} is neither a preset ({sorted(PRESETS)}) nor a scheme file")
