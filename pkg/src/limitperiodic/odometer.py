"""Procyclic Cantor groups, minimal translations and periodic sampling functions.

A procyclic group is stored as a finite tower of cyclic quotients
``Z/p_1 <- Z/p_2 <- ... <- Z/p_K`` with ``p_k | p_{k+1}``.  A group element is
the compatible list of its residues, and a sampling function of level ``k`` is
a function on ``Z/p_k``, i.e. a list of ``p_k`` numbers.

Levels are 1-based: level ``k`` refers to ``periods[k - 1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class GroupChain:
    periods: tuple[int, ...]

    def __post_init__(self):
        periods = tuple(int(p) for p in self.periods)
        if not periods:
            raise ValueError("chain must have at least one level")
        for i, p in enumerate(periods):
            if p < 1:
                raise ValueError(f"period at index {i} must be >= 1, got {p}")
        for i in range(1, len(periods)):
            if periods[i] % periods[i - 1]:
                raise ValueError(
                    f"{periods[i]} not divisible by {periods[i - 1]} (index {i})"
                )
        object.__setattr__(self, "periods", periods)

    @property
    def depth(self) -> int:
        return len(self.periods)

    def period(self, level: int) -> int:
        self._check_level(level)
        return self.periods[level - 1]

    def _check_level(self, level: int):
        if not 1 <= level <= self.depth:
            raise ValueError(f"level {level} outside 1..{self.depth}")

    def element(self, n: int = 0) -> "GroupElement":
        """The image of the integer ``n`` in the group (``n`` times the unit)."""
        return GroupElement(self, tuple(n % p for p in self.periods))

    def zero(self) -> "GroupElement":
        return self.element(0)

    def adding_machine(self) -> "GroupElement":
        """The default translation ``alpha = (1, 1, ..., 1)``."""
        return self.element(1)

    def extend(self, *periods: int) -> "GroupChain":
        return GroupChain(self.periods + tuple(periods))


def make_chain(periods: Iterable[int]) -> GroupChain:
    return GroupChain(tuple(periods))


@dataclass(frozen=True)
class GroupElement:
    chain: GroupChain
    residues: tuple[int, ...]

    def __post_init__(self):
        res = tuple(int(r) for r in self.residues)
        if len(res) != self.chain.depth:
            raise ValueError(
                f"expected {self.chain.depth} residues, got {len(res)}"
            )
        for i, (r, p) in enumerate(zip(res, self.chain.periods)):
            if not 0 <= r < p:
                raise ValueError(f"residue {r} at level {i + 1} not in [0, {p})")
            if i and r % self.chain.periods[i - 1] != res[i - 1]:
                raise ValueError(f"residue {r} at level {i + 1} incompatible with level {i}")
        object.__setattr__(self, "residues", res)

    def residue(self, level: int) -> int:
        self.chain._check_level(level)
        return self.residues[level - 1]

    def __add__(self, other: "GroupElement") -> "GroupElement":
        _same_chain(self, other)
        return GroupElement(
            self.chain,
            tuple((a + b) % p for a, b, p in zip(self.residues, other.residues, self.chain.periods)),
        )


def _same_chain(a: GroupElement, b: GroupElement):
    if a.chain != b.chain:
        raise ValueError("group elements live on different chains")


def translate(omega: GroupElement, alpha: GroupElement, n: int = 1) -> GroupElement:
    """``T^n omega = omega + n * alpha``."""
    _same_chain(omega, alpha)
    return GroupElement(
        omega.chain,
        tuple(
            (r + n * a) % p
            for r, a, p in zip(omega.residues, alpha.residues, omega.chain.periods)
        ),
    )


def is_minimal(chain: GroupChain, alpha: GroupElement) -> bool:
    if alpha.chain != chain:
        raise ValueError("alpha does not live on this chain")
    return all(math.gcd(a, p) == 1 for a, p in zip(alpha.residues, chain.periods))


@dataclass(frozen=True, eq=False)
class SamplingFunction:
    """A function on ``Omega / Omega_level``, i.e. a ``p_level``-periodic sampling function.

    ``values`` may hold floats or, for extended-precision constructions, mpmath numbers
    (an object array).
    """

    chain: GroupChain
    level: int
    values: np.ndarray

    def __post_init__(self):
        p = self.chain.period(self.level)
        vals = np.asarray(self.values)
        if vals.dtype != object:
            vals = vals.astype(float)
        vals = vals.copy()
        vals.setflags(write=False)
        if vals.shape != (p,):
            raise ValueError(f"level {self.level} needs {p} values, got shape {vals.shape}")
        object.__setattr__(self, "values", vals)

    @property
    def period(self) -> int:
        return self.chain.period(self.level)

    def sup_norm(self):
        return max(abs(v) for v in self.values)

    def __call__(self, omega: GroupElement):
        return self.values[omega.residue(self.level)]

    def embed(self, level: int) -> "SamplingFunction":
        """View the same function at a finer level (replicates the period block)."""
        if level < self.level:
            raise ValueError(f"cannot embed level {self.level} into coarser level {level}")
        reps = self.chain.period(level) // self.period
        return SamplingFunction(self.chain, level, np.tile(self.values, reps))

    def __add__(self, other: "SamplingFunction") -> "SamplingFunction":
        if other.chain != self.chain:
            raise ValueError("sampling functions live on different chains")
        level = max(self.level, other.level)
        return SamplingFunction(
            self.chain, level, self.embed(level).values + other.embed(level).values
        )

    def __sub__(self, other: "SamplingFunction") -> "SamplingFunction":
        return self + scale(other, -1)

    def __eq__(self, other):
        if not isinstance(other, SamplingFunction):
            return NotImplemented
        return (
            self.chain == other.chain
            and self.level == other.level
            and bool(np.all(self.values == other.values))
        )

    __hash__ = None

    def distance(self, other: "SamplingFunction"):
        return (self - other).sup_norm()

    def to_dict(self) -> dict[str, Any]:
        return {
            "periods": list(self.chain.periods),
            "level": self.level,
            "values": [float(v) for v in self.values],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SamplingFunction":
        try:
            chain = make_chain(data["periods"])
            return cls(chain, int(data["level"]), np.asarray(data["values"], dtype=float))
        except KeyError as exc:
            raise ValueError(f"sampling function record is missing {exc}") from None


def sampling_function(periods: Sequence[int], level: int, values) -> SamplingFunction:
    return SamplingFunction(make_chain(periods), level, values)


@dataclass(frozen=True, eq=False)
class Potential:
    """One period of a periodic potential, ``V(n) = values[n mod p]``."""

    values: np.ndarray
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.dtype != object:
            vals = vals.astype(float)
        vals = np.atleast_1d(vals).copy()
        vals.setflags(write=False)
        if vals.ndim != 1 or vals.size == 0:
            raise ValueError("a potential needs a nonempty 1-d period block")
        object.__setattr__(self, "values", vals)

    @property
    def period(self) -> int:
        return len(self.values)

    def __call__(self, n: int):
        return self.values[n % self.period]

    def sequence(self, start: int, stop: int) -> np.ndarray:
        """``V(start), ..., V(stop - 1)``."""
        idx = np.arange(start, stop) % self.period
        return self.values[idx]

    def shifted(self, m: int) -> "Potential":
        """The hull element ``n -> V(n + m)``."""
        return Potential(np.roll(self.values, -m), dict(self.provenance, shift=m))

    def __eq__(self, other):
        if not isinstance(other, Potential):
            return NotImplemented
        return self.period == other.period and bool(np.all(self.values == other.values))

    __hash__ = None

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self):
        return self.period


def sample_potential(
    f: SamplingFunction,
    omega: GroupElement | None = None,
    alpha: GroupElement | None = None,
    window: tuple[int, int] | None = None,
) -> Potential:
    """Sample ``V(n) = f(T^n omega)`` over one period ``p_level``.

    When ``window=(start, stop)`` is given, the sequence ``V(start..stop-1)`` is kept in
    ``provenance["window"]`` for inspection.
    """
    chain = f.chain
    omega = chain.zero() if omega is None else omega
    alpha = chain.adding_machine() if alpha is None else alpha
    if omega.chain != chain or alpha.chain != chain:
        raise ValueError("omega/alpha live on a different chain than f")
    if not is_minimal(chain, alpha):
        raise ValueError(f"translation {alpha.residues} is not minimal on {chain.periods}")
    p = f.period
    r = omega.residue(f.level)
    a = alpha.residue(f.level)
    idx = (r + a * np.arange(p)) % p
    prov = {
        "periods": list(chain.periods),
        "level": f.level,
        "omega": list(omega.residues),
        "alpha": list(alpha.residues),
    }
    pot = Potential(f.values[idx], prov)
    if window is not None:
        start, stop = window
        prov["window"] = {"start": start, "values": pot.sequence(start, stop).tolist()}
    return pot


def periodize(f: SamplingFunction, target_level: int) -> SamplingFunction:
    """Haar average of ``f`` over ``Omega_target / Omega_level``."""
    if target_level > f.level:
        raise ValueError(f"target level {target_level} is finer than f's level {f.level}")
    if target_level == f.level:
        return f
    pk = f.chain.period(target_level)
    blocks = f.values.reshape(-1, pk)
    return SamplingFunction(f.chain, target_level, blocks.sum(axis=0) / blocks.shape[0])


def hull_points(f: SamplingFunction, alpha: GroupElement | None = None) -> list[Potential]:
    """The potentials ``V_omega`` for the ``p_level`` cosets ``omega`` of ``Omega_level``."""
    chain = f.chain
    return [sample_potential(f, chain.element(r), alpha) for r in range(f.period)]


def distinct_hull_points(f: SamplingFunction, alpha: GroupElement | None = None) -> list[Potential]:
    seen: list[Potential] = []
    for pot in hull_points(f, alpha):
        if not any(pot == q for q in seen):
            seen.append(pot)
    return seen


def scale(f: SamplingFunction, lam) -> SamplingFunction:
    return SamplingFunction(f.chain, f.level, f.values * lam)


def as_values(V) -> np.ndarray:
    """Period block of a potential given as ``Potential``, ``SamplingFunction`` or sequence."""
    if isinstance(V, (Potential, SamplingFunction)):
        return np.asarray(V.values, dtype=float)
    vals = np.atleast_1d(np.asarray(V, dtype=float))
    if vals.ndim != 1 or vals.size == 0:
        raise ValueError("a potential needs a nonempty 1-d period block")
    return vals
