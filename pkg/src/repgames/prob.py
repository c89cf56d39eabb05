"""Exact finite probability tables over named variables.

A distribution is a dense float64 array with one axis per named variable.
All operations are exact table arithmetic; nothing is sampled here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

MAX_TABLE_ENTRIES = 10_000_000
ZERO_MASS = 1e-15


class ZeroProbabilityEvent(ValueError):
    """Conditioning on an event of (numerically) zero probability."""


def _expand_to(mask: np.ndarray, names: tuple, target_names: tuple,
               target_sizes: tuple) -> np.ndarray:
    """Broadcast an array over `names` into the axis layout of `target_names`."""
    missing = [n for n in names if n not in target_names]
    if missing:
        raise ValueError(f"variables {missing} not present in {target_names}")
    order = sorted(range(len(names)), key=lambda k: target_names.index(names[k]))
    arr = np.transpose(mask, order) if len(names) > 1 else np.asarray(mask)
    ordered = tuple(names[k] for k in order)
    shape = tuple(target_sizes[i] if target_names[i] in ordered else 1
                  for i in range(len(target_names)))
    return arr.reshape(shape)


@dataclass(frozen=True)
class Event:
    """A subset of assignments, given as a boolean mask over a few variables."""

    names: tuple
    sizes: tuple
    mask: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != tuple(self.sizes):
            raise ValueError(f"mask shape {mask.shape} != sizes {self.sizes}")
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "sizes", tuple(self.sizes))
        object.__setattr__(self, "mask", mask)

    @classmethod
    def from_assignment(cls, assign: Mapping[str, int], sizes: Mapping[str, int]) -> "Event":
        names = tuple(assign)
        shp = tuple(sizes[n] for n in names)
        mask = np.zeros(shp, dtype=bool)
        idx = tuple(int(assign[n]) for n in names)
        for n, i, s in zip(names, idx, shp):
            if not 0 <= i < s:
                raise ValueError(f"value {i} out of range for {n} (size {s})")
        mask[idx] = True
        return cls(names, shp, mask)

    def intersect(self, other: "Event") -> "Event":
        names = self.names + tuple(n for n in other.names if n not in self.names)
        size_of = dict(zip(self.names, self.sizes)) | dict(zip(other.names, other.sizes))
        for n, s in zip(other.names, other.sizes):
            if n in self.names and size_of[n] != s:
                raise ValueError(f"size mismatch for {n}")
        sizes = tuple(size_of[n] for n in names)
        a = _expand_to(self.mask, self.names, names, sizes)
        b = _expand_to(other.mask, other.names, names, sizes)
        return Event(names, sizes, np.broadcast_to(a & b, sizes).copy())


class FiniteDistribution:
    """Joint distribution over named finite variables as a dense table."""

    __slots__ = ("names", "table")

    def __init__(self, names: Iterable[str], table, normalize: bool = False):
        names = tuple(names)
        table = np.array(table, dtype=np.float64)
        if table.ndim != len(names):
            raise ValueError(f"table rank {table.ndim} != {len(names)} variables")
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable names")
        if table.size > MAX_TABLE_ENTRIES:
            raise ValueError(f"table of {table.size} entries exceeds the "
                             f"{MAX_TABLE_ENTRIES} entry cap")
        if not np.all(np.isfinite(table)):
            raise ValueError("table contains non-finite weights")
        if table.size and float(table.min()) < -1e-12:
            raise ValueError(f"negative weight {table.min():.3e}")
        table = np.clip(table, 0.0, None)
        mass = float(table.sum())
        if normalize:
            if mass <= ZERO_MASS:
                raise ZeroProbabilityEvent("total mass is zero")
            table = table / mass
        elif abs(mass - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {mass!r}, not 1 within 1e-12")
        table.setflags(write=False)
        self.names = names
        self.table = table

    # -- structure ---------------------------------------------------------

    @property
    def sizes(self) -> tuple:
        return self.table.shape

    def axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ValueError(f"unknown variable {name!r}; have {self.names}") from None

    def size_of(self, name: str) -> int:
        return self.table.shape[self.axis(name)]

    # -- queries -----------------------------------------------------------

    def _event_weights(self, event: Event) -> np.ndarray:
        if not event.names:
            return self.table
        for n, s in zip(event.names, event.sizes):
            if self.size_of(n) != s:
                raise ValueError(f"event size mismatch on {n}")
        mask = _expand_to(event.mask, event.names, self.names, self.sizes)
        return self.table * mask

    def prob(self, event: Event) -> float:
        return float(self._event_weights(event).sum())

    def condition(self, event: Event) -> "FiniteDistribution":
        """Restrict to the event and renormalize; keeps the full variable list."""
        w = self._event_weights(event)
        mass = float(w.sum())
        if mass <= ZERO_MASS:
            raise ZeroProbabilityEvent(f"event over {event.names} has mass {mass:.3e}")
        return FiniteDistribution(self.names, w / mass)

    def given(self, assign: Mapping[str, int]) -> "FiniteDistribution":
        """Condition on an assignment and drop the assigned variables."""
        if not assign:
            return self
        idx = [slice(None)] * len(self.names)
        for n, v in assign.items():
            ax = self.axis(n)
            if not 0 <= int(v) < self.table.shape[ax]:
                raise ValueError(f"value {v} out of range for {n}")
            idx[ax] = int(v)
        sub = self.table[tuple(idx)]
        mass = float(sub.sum())
        if mass <= ZERO_MASS:
            raise ZeroProbabilityEvent(f"assignment {dict(assign)} has mass {mass:.3e}")
        keep = tuple(n for n in self.names if n not in assign)
        return FiniteDistribution(keep, sub / mass)

    def marginal(self, names: Iterable[str]) -> "FiniteDistribution":
        names = tuple(names)
        axes = tuple(self.axis(n) for n in names)
        drop = tuple(i for i in range(len(self.names)) if i not in axes)
        t = self.table.sum(axis=drop) if drop else self.table
        kept = tuple(n for n in self.names if n in names)
        out = FiniteDistribution(kept, t, normalize=False)
        return out.reordered(names)

    def reordered(self, names: Iterable[str]) -> "FiniteDistribution":
        names = tuple(names)
        if names == self.names:
            return self
        if set(names) != set(self.names):
            raise ValueError(f"cannot reorder {self.names} as {names}")
        perm = tuple(self.names.index(n) for n in names)
        return FiniteDistribution(names, np.transpose(self.table, perm))

    def kernel(self, new_names: Iterable[str], given_names: Iterable[str]) -> "Kernel":
        """Conditional table of `new_names` given `given_names`.

        Rows whose conditioning assignment has zero mass are left all-zero and
        flagged undefined.
        """
        new_names = tuple(new_names)
        given_names = tuple(given_names)
        joint = self.marginal(given_names + new_names)
        g = len(given_names)
        base = joint.table.sum(axis=tuple(range(g, joint.table.ndim)))
        defined = base > ZERO_MASS
        denom = np.where(defined, base, 1.0)
        table = joint.table / denom.reshape(denom.shape + (1,) * len(new_names))
        table[~defined] = 0.0
        return Kernel(given_names, new_names, table, defined)


@dataclass(frozen=True)
class Kernel:
    """Conditional probability table: axes are given variables then new ones."""

    given_names: tuple
    new_names: tuple
    table: np.ndarray
    defined: np.ndarray

    @property
    def given_sizes(self) -> tuple:
        return self.table.shape[: len(self.given_names)]

    @property
    def new_sizes(self) -> tuple:
        return self.table.shape[len(self.given_names):]


def product_extend(base: FiniteDistribution, kernel: Kernel) -> FiniteDistribution:
    """Compose a distribution with a conditional table over fresh variables.

    The kernel's conditioning variables must appear in `base` (matched by
    name); the result ranges over base's variables followed by the kernel's
    new ones.  Raises if `base` puts mass where the kernel is undefined.
    """
    for n in kernel.new_names:
        if n in base.names:
            raise ValueError(f"variable {n} already present in base")
    g = len(kernel.given_names)
    axes_in_base = [base.axis(n) for n in kernel.given_names]
    order = sorted(range(g), key=lambda k: axes_in_base[k])
    kt = np.transpose(kernel.table, tuple(order) + tuple(range(g, kernel.table.ndim)))
    kd = np.transpose(kernel.defined, order) if g > 1 else kernel.defined
    ordered_given = tuple(kernel.given_names[k] for k in order)

    base_mass_on_given = base.marginal(ordered_given).table
    undefined_mass = float(base_mass_on_given[~kd].sum()) if g else 0.0
    if undefined_mass > 1e-12:
        raise ZeroProbabilityEvent(
            f"base has mass {undefined_mass:.3e} where the kernel is undefined")

    shape = tuple(base.sizes[i] if base.names[i] in ordered_given else 1
                  for i in range(len(base.names)))
    kt = kt.reshape(shape + kernel.new_sizes)
    bt = base.table.reshape(base.sizes + (1,) * len(kernel.new_names))
    return FiniteDistribution(base.names + kernel.new_names, bt * kt, normalize=True)


def tv_distance(p: FiniteDistribution, q: FiniteDistribution) -> float:
    """Total variation distance between distributions over the same variables."""
    if set(p.names) != set(q.names):
        raise ValueError(f"variable mismatch: {p.names} vs {q.names}")
    q = q.reordered(p.names)
    if p.sizes != q.sizes:
        raise ValueError(f"size mismatch: {p.sizes} vs {q.sizes}")
    return float(0.5 * np.abs(p.table - q.table).sum())


def uniform(names: Iterable[str], sizes: Iterable[int]) -> FiniteDistribution:
    sizes = tuple(sizes)
    table = np.full(sizes, 1.0 / float(np.prod(sizes)))
    return FiniteDistribution(names, table)
