"""Jump-noise intensity measure: region masses, mark sampling, compensators.

The driving Poisson random measure lives on R - {0} with a piecewise-uniform
intensity.  Marks with |u| < 1 are the "small" region (they enter the
dynamics compensated); |u| >= 1 is the "large" region (uncompensated).  The
bundled scenarios all use the uniform density on [-2, 2], which splits into
mass 2 small and mass 2 large, but the measure is a config value rather
than a constant.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .models import ModelSpec

__all__ = [
    "JumpBatch",
    "LevyMeasure",
    "compensator_integral",
    "region_mass",
    "sample_jumps",
]

SMALL = "small"
LARGE = "large"


def _clip_small(lo: float, hi: float) -> list[tuple[float, float]]:
    a, b = max(lo, -1.0), min(hi, 1.0)
    return [(a, b)] if a < b else []


def _clip_large(lo: float, hi: float) -> list[tuple[float, float]]:
    out = []
    a, b = max(lo, -np.inf), min(hi, -1.0)
    if a < b:
        out.append((a, b))
    a, b = max(lo, 1.0), min(hi, np.inf)
    if a < b:
        out.append((a, b))
    return out


@dataclass(frozen=True)
class LevyMeasure:
    """Piecewise-uniform intensity measure on a bounded support.

    ``pieces`` is a tuple of (lo, hi, density) intervals with lo < hi and
    density >= 0; intervals must not overlap.  Bounded support keeps
    integral(1 ^ |u|^2) finite automatically.
    """

    pieces: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        if not self.pieces:
            raise ValueError("measure needs at least one interval")
        ordered = sorted(self.pieces)
        for lo, hi, dens in ordered:
            if not lo < hi:
                raise ValueError(f"empty interval ({lo}, {hi})")
            if dens < 0:
                raise ValueError(f"negative density {dens}")
        for (_, hi1, _), (lo2, _, _) in zip(ordered, ordered[1:]):
            if hi1 > lo2:
                raise ValueError("overlapping intervals")
        object.__setattr__(self, "pieces", tuple(ordered))

    @classmethod
    def uniform(cls, lo: float = -2.0, hi: float = 2.0, density: float = 1.0) -> "LevyMeasure":
        return cls(pieces=((lo, hi, density),))

    def region_pieces(self, region: str) -> tuple[tuple[float, float, float], ...]:
        if region not in (SMALL, LARGE):
            raise ValueError(f"region must be {SMALL!r} or {LARGE!r}, got {region!r}")
        clip = _clip_small if region == SMALL else _clip_large
        out = []
        for lo, hi, dens in self.pieces:
            out.extend((a, b, dens) for a, b in clip(lo, hi))
        return tuple(out)

    def mass(self, region: str) -> float:
        return float(sum((hi - lo) * dens for lo, hi, dens in self.region_pieces(region)))

    def quadrature(self, region: str, nodes_per_piece: int = 1001):
        """Midpoint nodes and weights for integrating against the measure
        restricted to ``region``.  Exact for u-constant integrands."""
        us, ws = [], []
        for lo, hi, dens in self.region_pieces(region):
            edges = np.linspace(lo, hi, nodes_per_piece + 1)
            us.append(0.5 * (edges[:-1] + edges[1:]))
            ws.append(np.full(nodes_per_piece, (hi - lo) / nodes_per_piece * dens))
        if not us:
            return np.empty(0), np.empty(0)
        return np.concatenate(us), np.concatenate(ws)

    def sample_marks(self, region: str, count: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``count`` i.i.d. marks from the normalized measure on
        ``region`` by inverse CDF on the piecewise-constant density.  Exact
        and rejection-free; consumes exactly ``count`` uniforms."""
        pieces = self.region_pieces(region)
        total = sum((hi - lo) * dens for lo, hi, dens in pieces)
        if count == 0:
            return np.empty(0)
        if total <= 0:
            raise ValueError(f"cannot sample from massless region {region!r}")
        u = rng.uniform(0.0, total, size=count)
        cum = np.cumsum([(hi - lo) * dens for lo, hi, dens in pieces])
        idx = np.searchsorted(cum, u, side="right")
        lows = np.array([p[0] for p in pieces])
        denss = np.array([p[2] for p in pieces])
        offsets = u - np.concatenate(([0.0], cum[:-1]))[idx]
        return lows[idx] + offsets / denss[idx]


@dataclass(frozen=True)
class JumpBatch:
    """Marks landing in one region during one time step."""

    marks: np.ndarray
    region: str

    def __len__(self) -> int:
        return len(self.marks)


def region_mass(measure: LevyMeasure, region: str) -> float:
    """Measure of the small (|u| < 1) or large (|u| >= 1) region."""
    return measure.mass(region)


def sample_jumps(measure: LevyMeasure, region: str, dt: float, rng: np.random.Generator) -> JumpBatch:
    """One step's worth of jumps: Poisson(mass * dt) count, i.i.d. marks.

    Deterministic given the generator state.  Draw order: one Poisson count,
    then ``count`` uniforms for the marks.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    mass = measure.mass(region)
    if mass == 0.0:
        return JumpBatch(marks=np.empty(0), region=region)
    count = int(rng.poisson(mass * dt))
    return JumpBatch(marks=measure.sample_marks(region, count, rng), region=region)


def compensator_integral(model: "ModelSpec", t: float, state) -> tuple[float, float, float]:
    """integral over {|u|<1} of the small-jump coefficient vector, against
    the model's intensity measure.

    Closed form (single evaluation times the small mass) when the model's
    jump coefficients do not depend on u; midpoint quadrature otherwise.
    """
    vec = model.compensator(t, np.asarray(state, dtype=float))
    return (float(vec[..., 0]), float(vec[..., 1]), float(vec[..., 2]))
