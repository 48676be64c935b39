"""SU(2)-type fusion ring on labels 0, 1, 2, ... together with quantum and
classical dimensions and the convolution algebra of finitely supported
probability measures on labels."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import OutOfRange, ValidationError

PRUNE_EPS = 1e-15
MASS_TOL = 1e-12

Label = int


def fusion_mult(x: Label, y: Label, z: Label) -> int:
    """Multiplicity of z in x (x) y: 1 iff z walks the ladder
    |x-y|, |x-y|+2, ..., x+y."""
    if x < 0 or y < 0 or z < 0:
        return 0
    if z < abs(x - y) or z > x + y:
        return 0
    return 1 if (x + y - z) % 2 == 0 else 0


def fusion_range(x: Label, y: Label):
    """All z with fusion_mult(x, y, z) = 1, ascending."""
    return range(abs(x - y), x + y + 1, 2)


def qdim(x: Label, q: float) -> float:
    """Quantum dimension [x+1] at deformation |q|:
    (|q|^(x+1) - |q|^-(x+1)) / (|q| - 1/|q|)."""
    t = abs(q)
    if not (0.0 < t < 1.0):
        raise OutOfRange(f"|q| must lie in (0,1), got {q}")
    if x < 0:
        raise OutOfRange(f"label must be >= 0, got {x}")
    return (t ** (x + 1) - t ** (-(x + 1))) / (t - 1.0 / t)


def classical_dim(x: Label, n: int) -> int:
    """Integer dimensions: d_0 = 1, d_1 = n, d_{x+1} = n d_x - d_{x-1}."""
    if n < 2:
        raise OutOfRange(f"n must be >= 2, got {n}")
    if x < 0:
        raise OutOfRange(f"label must be >= 0, got {x}")
    prev, cur = 1, n
    if x == 0:
        return 1
    for _ in range(x - 1):
        prev, cur = cur, n * cur - prev
    return cur


@dataclass(frozen=True)
class Measure:
    """Finitely supported probability measure on labels."""

    weights: dict = field(default_factory=dict)

    def __post_init__(self):
        w = {int(k): float(v) for k, v in self.weights.items() if float(v) != 0.0}
        for k, v in w.items():
            if k < 0:
                raise ValidationError(f"negative label {k}")
            if v < 0:
                raise ValidationError(f"negative weight {v} at label {k}")
        total = sum(w.values())
        if abs(total - 1.0) > MASS_TOL:
            raise ValidationError(f"weights sum to {total}, not 1")
        object.__setattr__(self, "weights", w)

    @staticmethod
    def delta(x: Label) -> "Measure":
        return Measure({x: 1.0})

    @staticmethod
    def from_string(spec: str) -> "Measure":
        """Parse "label:weight,label:weight"; no silent renormalization."""
        w = {}
        for part in spec.split(","):
            part = part.strip()
            if not part:
                continue
            try:
                k, v = part.split(":")
                w[int(k)] = w.get(int(k), 0.0) + float(v)
            except ValueError as exc:
                raise ValidationError(f"bad measure component {part!r}") from exc
        if not w:
            raise ValidationError("empty measure")
        return Measure(w)

    def support(self):
        return sorted(self.weights)

    def __call__(self, x: Label) -> float:
        return self.weights.get(x, 0.0)

    def max_label(self) -> Label:
        return max(self.weights) if self.weights else 0

    def items(self):
        return sorted(self.weights.items())

    def total_mass(self) -> float:
        return sum(self.weights.values())

    def mass_above(self, x_max: Label) -> float:
        return sum(v for k, v in self.weights.items() if k > x_max)

    def to_json(self) -> dict:
        return {"weights": {str(k): v for k, v in self.items()}}


def convolve(mu: Measure, nu: Measure, q: float) -> Measure:
    """(mu * nu)(z) = sum_{x,y} mu(x) nu(y) qdim(z) / (qdim(x) qdim(y)) over
    z in the fusion range of (x, y).  Weights below 1e-15 are pruned."""
    out: dict = {}
    for x, wx in mu.items():
        dx = qdim(x, q)
        for y, wy in nu.items():
            dy = qdim(y, q)
            c = wx * wy / (dx * dy)
            for z in fusion_range(x, y):
                out[z] = out.get(z, 0.0) + c * qdim(z, q)
    out = {k: v for k, v in out.items() if v > PRUNE_EPS}
    total = sum(out.values())
    # pruning can only remove O(eps) mass; renormalizing would hide bugs
    if abs(total - 1.0) > 1e-9:
        raise ValidationError(f"convolution lost mass: total {total}")
    m = Measure.__new__(Measure)
    object.__setattr__(m, "weights", out)
    return m


def convolution_power(mu: Measure, n: int, q: float) -> Measure:
    """mu convolved with itself n times; n = 0 gives the point mass at 0."""
    if n < 0:
        raise OutOfRange("n must be >= 0")
    acc = Measure.delta(0)
    for _ in range(n):
        acc = convolve(acc, mu, q)
    return acc


def _generating_by_closure(support, horizon: int) -> bool:
    """Reachability of every label in [0, horizon] by iterated fusion with
    the support, starting from label 0."""
    reached = {0}
    frontier = {0}
    for _ in range(2 * horizon + 4):
        new = set()
        for x in frontier:
            for y in support:
                for z in fusion_range(x, y):
                    if z <= horizon and z not in reached:
                        new.add(z)
        if not new:
            break
        reached |= new
        frontier = new
    return all(z in reached for z in range(horizon + 1))


def measure_props(mu: Measure) -> dict:
    """Generating test, parity diagnostics and first moment of a measure.

    For SU(2)-type fusion the closure of the support reaches every label
    iff some odd label carries mass; the finite-horizon closure computation
    is cross-checked against that parity shortcut.
    """
    support = mu.support()
    has_odd = any(x % 2 == 1 for x in support)
    horizon = 2 * mu.max_label() + 64
    generating = _generating_by_closure(support, horizon)
    if generating != has_odd:
        raise ValidationError(
            "internal inconsistency between closure and parity criteria"
        )
    if not support or support == [0]:
        parity_note = "support is {0}: the walk never moves"
    elif has_odd:
        parity_note = ""
    else:
        parity_note = "support is even: walk confined to even labels"
    first_moment = sum(x * w for x, w in mu.items())
    return {
        "generating": generating,
        "parity_note": parity_note,
        "first_moment": first_moment,
    }
