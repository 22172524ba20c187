"""
Physical configuration of the ion chain and the detector geometry.

Ion coordinates are stored in units of the fluorescence wavelength, so the
optical phase of ion j seen by a far-field detector at angle phi is
``2*pi*R_j*sin(phi)``. The chain lies along one axis of the detection plane.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, ClassVar, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DegenerateSliceError

HALF_PI = math.pi / 2

#: Default number of phi1 samples for one-dimensional slices.
DEFAULT_SCAN_POINTS = 1001
#: Default points per axis for the 2-D grid.
DEFAULT_GRID_POINTS = 201

#: Display-only wavelength of the fluorescence light, never used in computation.
DISPLAY_WAVELENGTH_NM = 194.0

_SPACING_RTOL = 1e-12


@dataclass(frozen=True)
class IonChain:
    """Ion positions along the chain axis (in wavelengths) and the dark-ion index.

    ``isotope`` is 1-based; ``None`` means every ion radiates.
    """

    positions: tuple[float, ...]
    isotope: Optional[int] = None

    def __post_init__(self):
        pos = tuple(float(x) for x in self.positions)
        object.__setattr__(self, "positions", pos)
        if len(pos) < 2:
            raise ConfigurationError(f"chain needs N >= 2 ions, got {len(pos)}")
        if not all(math.isfinite(x) for x in pos):
            raise ConfigurationError("ion positions must be finite")
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise ConfigurationError("ion positions must be strictly increasing (no coincident ions)")
        if self.isotope is not None:
            if isinstance(self.isotope, bool) or int(self.isotope) != self.isotope:
                raise ConfigurationError(f"isotope index must be an integer, got {self.isotope!r}")
            p = int(self.isotope)
            object.__setattr__(self, "isotope", p)
            if not 1 <= p <= len(pos):
                raise ConfigurationError(
                    f"isotope index {p} outside 1..{len(pos)} (invariant 1 <= p <= N)"
                )

    @classmethod
    def equally_spaced(cls, n: int, spacing: float, isotope: Optional[int] = None) -> "IonChain":
        if int(n) != n or n < 2:
            raise ConfigurationError(f"chain needs N >= 2 ions, got {n!r}")
        if not spacing > 0:
            raise ConfigurationError(f"spacing must be positive, got {spacing!r}")
        return cls(tuple(k * float(spacing) for k in range(int(n))), isotope)

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "IonChain":
        """Build a chain from ``{"positions_lambda": [...]}`` or ``{"n": N, "spacing_lambda": d}``.

        Both forms take an optional ``"isotope"`` (1-based index or null).
        """
        keys = set(doc)
        isotope = doc.get("isotope")
        if "positions_lambda" in keys:
            unknown = keys - {"positions_lambda", "isotope"}
            if unknown:
                raise ConfigurationError(f"unknown chain fields: {sorted(unknown)}")
            return cls(tuple(doc["positions_lambda"]), isotope)
        if {"n", "spacing_lambda"} <= keys:
            unknown = keys - {"n", "spacing_lambda", "isotope"}
            if unknown:
                raise ConfigurationError(f"unknown chain fields: {sorted(unknown)}")
            return cls.equally_spaced(doc["n"], doc["spacing_lambda"], isotope)
        raise ConfigurationError(
            'chain document needs "positions_lambda" or both "n" and "spacing_lambda"'
        )

    @classmethod
    def from_json(cls, path) -> "IonChain":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict[str, Any]:
        return {"positions_lambda": list(self.positions), "isotope": self.isotope}

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def radiating(self) -> list[int]:
        """0-based indices of the ions that scatter light."""
        skip = None if self.isotope is None else self.isotope - 1
        return [j for j in range(self.n) if j != skip]

    @property
    def is_equally_spaced(self) -> bool:
        gaps = np.diff(self.positions)
        return bool(np.all(np.abs(gaps - gaps[0]) <= _SPACING_RTOL * abs(gaps[0])))

    @property
    def spacing(self) -> Optional[float]:
        """Common spacing for equally spaced chains, else ``None``."""
        if not self.is_equally_spaced:
            return None
        return self.positions[1] - self.positions[0]

    def with_isotope(self, p: Optional[int]) -> "IonChain":
        return IonChain(self.positions, p)


def check_angle(phi: float, name: str = "phi") -> float:
    """Validate a detector angle, which must lie in [-pi/2, pi/2]."""
    phi = float(phi)
    if not abs(phi) <= HALF_PI:
        raise ConfigurationError(f"{name}={phi!r} outside [-pi/2, pi/2]")
    return phi


@dataclass(frozen=True)
class ExcitationPulse:
    """Pulse area on the f<->e transition, in radians (0 <= area <= pi)."""

    area: float = math.pi

    def __post_init__(self):
        area = float(self.area)
        object.__setattr__(self, "area", area)
        if not 0.0 <= area <= math.pi:
            raise ConfigurationError(f"pulse area {area!r} outside [0, pi]")

    @property
    def pop_e(self) -> float:
        """Upper-level population sin^2(area/2)."""
        return math.sin(self.area / 2) ** 2

    @property
    def coh_sq(self) -> float:
        """Squared coherence magnitude sin^2(area)/4."""
        return math.sin(self.area) ** 2 / 4

    @property
    def is_pi(self) -> bool:
        return abs(self.area - math.pi) <= 1e-12


PI_PULSE = ExcitationPulse(math.pi)
HALF_PI_PULSE = ExcitationPulse(math.pi / 2)


def phase_projection(chain: IonChain, ion: int, phi: float) -> float:
    """Optical phase ``k n.R`` of ion ``ion`` (1-based) for a detector at ``phi``."""
    if isinstance(ion, bool) or int(ion) != ion or not 1 <= ion <= chain.n:
        raise IndexError(f"ion index {ion!r} outside 1..{chain.n}")
    phi = check_angle(phi)
    return 2 * math.pi * chain.positions[int(ion) - 1] * math.sin(phi)


# ---------------------------------------------------------------------------
# Slices: detector-angle trajectories through the (phi1, phi2) plane
# ---------------------------------------------------------------------------


def _check_points(n_points):
    if isinstance(n_points, bool) or int(n_points) != n_points or n_points < 2:
        raise ConfigurationError(f"n_points must be an integer >= 2, got {n_points!r}")


@dataclass(frozen=True, kw_only=True)
class ScanSlice:
    """A one-parameter family of detector pairs, scanned over phi1 in [lo, hi].

    The range and point count are keyword-only; subclasses take their own
    defining parameter positionally, e.g. ``OffsetMagnitude(1 / math.pi)``.
    """

    lo: float = -HALF_PI
    hi: float = HALF_PI
    n_points: int = DEFAULT_SCAN_POINTS

    kind: ClassVar[str] = ""

    def __post_init__(self):
        _check_points(self.n_points)
        check_angle(self.lo, "lo")
        check_angle(self.hi, "hi")
        if not self.lo < self.hi:
            raise ConfigurationError(f"scan range needs lo < hi, got [{self.lo}, {self.hi}]")

    def partner(self, phi1):
        """Second-detector angle for each phi1; NaN where no valid partner exists."""
        raise NotImplementedError

    def scan_range(self) -> tuple[float, float]:
        return self.lo, self.hi

    def to_dict(self) -> dict[str, Any]:
        doc = {"kind": self.kind}
        doc.update({f.name: getattr(self, f.name) for f in self.__dataclass_fields__.values()})
        return doc


@dataclass(frozen=True)
class FixedSecond(ScanSlice):
    """Second detector parked at ``phi2``; scan the first."""

    phi2: float = 0.0
    kind: ClassVar[str] = "fixed-second"

    def __post_init__(self):
        super().__post_init__()
        check_angle(self.phi2, "phi2")

    def partner(self, phi1):
        return np.full_like(np.asarray(phi1, dtype=float), self.phi2)


@dataclass(frozen=True)
class OppositeScan(ScanSlice):
    """Detectors mirrored about the chain normal: phi2 = -phi1."""

    kind: ClassVar[str] = "opposite"

    def partner(self, phi1):
        return -np.asarray(phi1, dtype=float)


@dataclass(frozen=True)
class OffsetMagnitude(ScanSlice):
    """|phi1| - |phi2| = offset, with the detectors on opposite sides of the normal.

    Points where no such phi2 exists inside [-pi/2, pi/2] are dropped.
    """

    offset: float = 1 / math.pi
    kind: ClassVar[str] = "offset-mag"

    def __post_init__(self):
        super().__post_init__()
        if not math.isfinite(self.offset):
            raise ConfigurationError("offset must be finite")

    def partner(self, phi1):
        phi1 = np.asarray(phi1, dtype=float)
        mag = np.abs(phi1) - self.offset
        phi2 = -np.sign(phi1) * mag
        return np.where((mag >= 0) & (mag <= HALF_PI), phi2, np.nan)


@dataclass(frozen=True)
class FixedSinDelta(ScanSlice):
    """sin(phi1) - sin(phi2) = delta; the phi1 range is clipped to where phi2 exists."""

    delta: float = 0.378
    kind: ClassVar[str] = "fixed-sindelta"

    def __post_init__(self):
        super().__post_init__()
        if not abs(self.delta) <= 2:
            raise ConfigurationError(f"fixed-sindelta needs |delta| <= 2, got {self.delta!r}")

    def partner(self, phi1):
        s2 = np.sin(np.asarray(phi1, dtype=float)) - self.delta
        out = np.arcsin(np.clip(s2, -1.0, 1.0))
        return np.where(np.abs(s2) <= 1.0, out, np.nan)

    def scan_range(self) -> tuple[float, float]:
        lo = max(self.lo, math.asin(max(-1.0, self.delta - 1.0)))
        hi = min(self.hi, math.asin(min(1.0, self.delta + 1.0)))
        if not lo < hi:
            raise DegenerateSliceError(
                f"fixed-sindelta(delta={self.delta}) has no valid phi1 inside [{self.lo}, {self.hi}]"
            )
        return lo, hi


@dataclass(frozen=True)
class Grid2D:
    """Full ``n_points x n_points`` grid over [phi_min, phi_max]^2; rows index phi1."""

    phi_min: float = -HALF_PI
    phi_max: float = HALF_PI
    n_points: int = DEFAULT_GRID_POINTS

    kind: ClassVar[str] = "grid2d"

    def __post_init__(self):
        _check_points(self.n_points)
        check_angle(self.phi_min, "phi_min")
        check_angle(self.phi_max, "phi_max")
        if not self.phi_min < self.phi_max:
            raise ConfigurationError("grid2d needs phi_min < phi_max")

    def axis(self) -> np.ndarray:
        return np.linspace(self.phi_min, self.phi_max, int(self.n_points))

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "phi_min": self.phi_min, "phi_max": self.phi_max,
                "n_points": self.n_points}


SliceSpec = Grid2D | FixedSecond | OppositeScan | OffsetMagnitude | FixedSinDelta

SLICE_KINDS: dict[str, type] = {
    cls.kind: cls for cls in (Grid2D, FixedSecond, OppositeScan, OffsetMagnitude, FixedSinDelta)
}


def slice_from_dict(doc: dict[str, Any]) -> SliceSpec:
    doc = dict(doc)
    try:
        cls = SLICE_KINDS[doc.pop("kind")]
    except KeyError as exc:
        raise ConfigurationError(f"unknown or missing slice kind: {exc}") from None
    try:
        return cls(**doc)
    except TypeError as exc:
        raise ConfigurationError(f"bad slice fields for {cls.kind}: {exc}") from None


def resolve_slice(slice_: SliceSpec) -> np.ndarray:
    """Materialize a slice as an ``(n, 2)`` array of (phi1, phi2) pairs.

    Grid2D pairs are row-major with phi1 varying slowest.
    """
    if isinstance(slice_, Grid2D):
        ax = slice_.axis()
        p1, p2 = np.meshgrid(ax, ax, indexing="ij")
        return np.column_stack([p1.ravel(), p2.ravel()])
    lo, hi = slice_.scan_range()
    phi1 = np.linspace(lo, hi, int(slice_.n_points))
    phi2 = slice_.partner(phi1)
    keep = ~np.isnan(phi2)
    if not keep.any():
        raise DegenerateSliceError(f"slice {slice_.to_dict()} resolves to no detector pairs")
    return np.column_stack([phi1[keep], phi2[keep]])


@dataclass(frozen=True, eq=False)
class Pattern:
    """Correlation values sampled over a slice.

    ``values`` is 1-D for scan slices and an ``(n, n)`` matrix for Grid2D.
    ``pairs`` holds the resolved (phi1, phi2) of every value in row-major order.
    """

    slice: SliceSpec
    axis: np.ndarray
    pairs: np.ndarray
    values: np.ndarray
    order: int
    chain: IonChain
    pulse: ExcitationPulse = field(default=PI_PULSE)

    @property
    def isotope(self) -> Optional[int]:
        return self.chain.isotope

    @property
    def flat_values(self) -> np.ndarray:
        return self.values.ravel()

    @property
    def normalizable(self) -> bool:
        return bool(np.any(self.flat_values > 0))

    @property
    def meta(self) -> dict[str, Any]:
        return {
            "order": self.order,
            "chain": self.chain.to_dict(),
            "pulse_area": self.pulse.area,
            "isotope": self.isotope,
            "slice": self.slice.to_dict(),
            "wavelength_nm": DISPLAY_WAVELENGTH_NM,
        }

    def scaled(self, c: float) -> "Pattern":
        """Copy with every value multiplied by ``c`` (c > 0)."""
        if not c > 0:
            raise ValueError("scale factor must be positive")
        return Pattern(self.slice, self.axis, self.pairs, self.values * c, self.order,
                       self.chain, self.pulse)
