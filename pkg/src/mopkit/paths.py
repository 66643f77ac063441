"""Multi-index paths: one component incremented per step.

A path of length L determines indices n_0 = 0, n_{l+1} = n_l + e_{i_l}; the
greedy generator tracks a prescribed direction vector with deviation at most
r in every component.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple

from .errors import ValidationError
from .measures import rational


@dataclass(frozen=True)
class Path:
    r: int
    steps: Tuple[int, ...]
    direction: Optional[Tuple[Fraction, ...]] = None

    def __post_init__(self):
        if self.r < 1:
            raise ValidationError(f"need r >= 1, got {self.r}")
        for s in self.steps:
            if not 1 <= s <= self.r:
                raise ValidationError(f"step {s} outside 1..{self.r}")

    @property
    def length(self) -> int:
        return len(self.steps)

    def index(self, ell: int) -> Tuple[int, ...]:
        """Multi-index n_ell (requires ell <= length)."""
        if not 0 <= ell <= self.length:
            raise ValidationError(f"index {ell} outside 0..{self.length}")
        n = [0] * self.r
        for s in self.steps[:ell]:
            n[s - 1] += 1
        return tuple(n)

    def indices(self):
        """All indices n_0 .. n_L."""
        n = [0] * self.r
        out = [tuple(n)]
        for s in self.steps:
            n[s - 1] += 1
            out.append(tuple(n))
        return out

    def step_component(self, ell: int) -> int:
        """i_ell, the component incremented between n_ell and n_{ell+1}."""
        return self.steps[ell]


def stepline(r: int, L: int) -> Path:
    """Cyclic steps 1, 2, ..., r, 1, 2, ...; direction (1/r, ..., 1/r)."""
    if r < 1 or L < 0:
        raise ValidationError(f"need r >= 1 and L >= 0, got r={r}, L={L}")
    steps = tuple(1 + (l % r) for l in range(L))
    direction = tuple(Fraction(1, r) for _ in range(r))
    return Path(r=r, steps=steps, direction=direction)


def direction_path(s, L: int) -> Path:
    """Greedy path following the direction vector s (positive, sums to 1).

    At step l the component maximising s_i (l+1) - (n_l)_i is incremented,
    ties to the smallest index; this keeps |(n_l)_i - s_i l| <= r.
    """
    s = tuple(rational(v) for v in s)
    if any(v <= 0 for v in s):
        raise ValidationError(f"direction must be strictly positive, got {s}")
    if sum(s) != 1:
        raise ValidationError(f"direction must sum to 1, got sum {sum(s)}")
    r = len(s)
    n = [0] * r
    steps = []
    for ell in range(L):
        best = None
        best_score = None
        for i in range(r):
            score = s[i] * (ell + 1) - n[i]
            if best_score is None or score > best_score:
                best, best_score = i, score
        steps.append(best + 1)
        n[best] += 1
    return Path(r=r, steps=tuple(steps), direction=s)


@dataclass(frozen=True)
class PathDiagnostics:
    compliant: bool
    increment_counts: Tuple[int, ...]
    stalled_components: Tuple[int, ...]
    max_direction_deviation: Optional[Fraction]

    @property
    def all_components_grow(self) -> bool:
        return not self.stalled_components


def validate(path: Path) -> PathDiagnostics:
    """Report step compliance, per-component growth and direction deviation.

    A component that never increases is flagged: on an infinite continuation
    it would violate the requirement that every component tends to infinity.
    """
    counts = [0] * path.r
    max_dev = None
    n = [0] * path.r
    if path.direction is not None:
        max_dev = Fraction(0)
    for ell, step in enumerate(path.steps, start=1):
        counts[step - 1] += 1
        n[step - 1] += 1
        if path.direction is not None:
            for i in range(path.r):
                dev = abs(Fraction(n[i]) - path.direction[i] * ell)
                if dev > max_dev:
                    max_dev = dev
    stalled = tuple(i + 1 for i, c in enumerate(counts) if c == 0)
    return PathDiagnostics(
        compliant=True,
        increment_counts=tuple(counts),
        stalled_components=stalled,
        max_direction_deviation=max_dev,
    )
