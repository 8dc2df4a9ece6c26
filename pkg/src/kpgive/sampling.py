"""Deterministic pseudo-random twisted loop algebra and group elements."""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field

from gmpy2 import mpq

from .loop import LoopAlgebraElement, LoopGroupElement


@dataclass(frozen=True)
class Shape:
    """Bounds for sampled elements.

    ``factors`` lists (sign, levels) per exponential factor; they are reordered
    so that raising factors stand left of lowering ones (the R·S form, for
    which τ₀(0) = 1 and all Fock computations are exact).
    """

    n: int = 2
    factors: tuple = (("-", (1,)),)
    max_num: int = 3
    max_den: int = 2

    @classmethod
    def from_json(cls, obj):
        factors = tuple((f["sign"], tuple(f["levels"])) for f in obj.get("factors", []))
        return cls(obj.get("n", 2), factors or cls.factors, obj.get("max_num", 3),
                   obj.get("max_den", 2))


def _rational(rng, max_num, max_den):
    return mpq(rng.randint(-max_num, max_num), rng.randint(1, max_den))


def twisted_matrix(rng, n, level, max_num=3, max_den=2):
    """Symmetric (odd level) or antisymmetric (even level) matrix with small entries."""
    sym = level % 2 == 1
    M = [[mpq(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            if i == j and not sym:
                continue
            x = _rational(rng, max_num, max_den)
            M[i][j] = x
            M[j][i] = x if sym else -x
    return M


def sample_algebra(rng, n, sign, levels, max_num=3, max_den=2, *, nonzero=True):
    if isinstance(rng, int):
        rng = random.Random(rng)
    levels = [l for l in levels if n > 1 or l % 2 == 1]
    while True:
        terms = [(l, twisted_matrix(rng, n, l, max_num, max_den)) for l in levels]
        a = LoopAlgebraElement(sign, terms, n)
        if not nonzero or not a.is_zero() or not levels:
            return a


def sample_group(seed, shape: Shape) -> LoopGroupElement:
    rng = random.Random(seed)
    factors = [sample_algebra(rng, shape.n, sign, levels, shape.max_num, shape.max_den)
               for sign, levels in shape.factors]
    raising = [f for f in factors if f.raises]
    lowering = [f for f in factors if not f.raises]
    return LoopGroupElement(raising + lowering, shape.n)


def fingerprint(element) -> str:
    """Short stable hash of an element's JSON form, used to flag sample collisions."""
    text = json.dumps(element.to_json(), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass
class Sample:
    group: LoopGroupElement
    algebra: LoopAlgebraElement | None = None
    seed: int = 0
    tags: dict = field(default_factory=dict)


def sample_pairs(count, n_values, factor_shapes, algebra_shapes, seed=0, max_num=3, max_den=2):
    """Cycle through the given shapes deterministically, returning ``count`` samples."""
    out = []
    rng = random.Random(seed)
    i = 0
    while len(out) < count:
        n = n_values[i % len(n_values)]
        fshape = factor_shapes[(i // len(n_values)) % len(factor_shapes)]
        ashape = algebra_shapes[i % len(algebra_shapes)] if algebra_shapes else None
        sub = rng.randrange(1 << 30)
        A = sample_group(sub, Shape(n, tuple(fshape), max_num, max_den))
        a = None
        if ashape is not None:
            sign, levels = ashape
            usable = [l for l in levels if n > 1 or l % 2 == 1]
            if not usable:
                i += 1
                continue
            a = sample_algebra(random.Random(sub + 1), n, sign, usable, max_num, max_den)
        out.append(Sample(A, a, sub, {"n": n, "factors": fshape, "algebra": ashape}))
        i += 1
    return out
