"""Two-player one-round games and their repeated index spaces.

A game is a question distribution mu over (x, y) plus a winning predicate
V[x, y, a, b].  Repetition is handled through index arithmetic on per-round
variables named x1..xn, y1..yn, a1..an, b1..bn; the n-fold predicate is never
materialized as a standalone object.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .prob import Event, FiniteDistribution, MAX_TABLE_ENTRIES

MAX_TUPLE_ENUM = 1_000_000


def x_names(n: int) -> tuple:
    return tuple(f"x{i}" for i in range(1, n + 1))


def y_names(n: int) -> tuple:
    return tuple(f"y{i}" for i in range(1, n + 1))


def a_names(n: int) -> tuple:
    return tuple(f"a{i}" for i in range(1, n + 1))


def b_names(n: int) -> tuple:
    return tuple(f"b{i}" for i in range(1, n + 1))


@dataclass(frozen=True)
class Game:
    x_size: int
    y_size: int
    a_size: int
    b_size: int
    mu: np.ndarray
    predicate: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        mu = np.array(self.mu, dtype=np.float64)
        pred = np.array(self.predicate, dtype=bool)
        if mu.shape != (self.x_size, self.y_size):
            raise ValueError(f"mu shape {mu.shape} != ({self.x_size}, {self.y_size})")
        if pred.shape != (self.x_size, self.y_size, self.a_size, self.b_size):
            raise ValueError(f"predicate shape {pred.shape} is wrong")
        mu.setflags(write=False)
        pred.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "predicate", pred)

    @property
    def answer_bits(self) -> float:
        """log2 of the joint answer alphabet size."""
        return math.log2(self.a_size * self.b_size)

    def mu_dist(self, n: int = 1) -> FiniteDistribution:
        """Product question distribution over x1..xn, y1..yn."""
        t = np.array(1.0)
        for _ in range(n):
            t = np.multiply.outer(t, self.mu)
        # axes currently interleaved (x1, y1, x2, y2, ...): regroup
        perm = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
        t = np.transpose(t, perm) if n > 1 else t
        return FiniteDistribution(x_names(n) + y_names(n), t, normalize=False)


@dataclass
class GameReport:
    ok: bool
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)


def validate_game(g: Game) -> GameReport:
    """Check normalization and support; empty mu rows are warnings, not errors."""
    rep = GameReport(ok=True)
    if min(g.x_size, g.y_size, g.a_size, g.b_size) < 1:
        rep.errors.append("alphabet sizes must be positive")
    if float(g.mu.min(initial=0.0)) < -1e-12:
        rep.errors.append(f"mu has negative weight {g.mu.min():.3e}")
    total = float(g.mu.sum())
    if abs(total - 1.0) > 1e-12:
        rep.errors.append(f"mu sums to {total!r}, not 1 within 1e-12")
    for x in range(g.x_size):
        if g.mu[x, :].sum() <= 0:
            rep.warnings.append(f"question x={x} has zero probability")
    for y in range(g.y_size):
        if g.mu[:, y].sum() <= 0:
            rep.warnings.append(f"question y={y} has zero probability")
    if not g.predicate.any():
        rep.warnings.append("predicate is identically false")
    rep.ok = not rep.errors
    return rep


def enumerate_tuples(g: Game, n: int):
    """Yield (x_tuple, y_tuple, weight) over the n-fold question space."""
    count = (g.x_size * g.y_size) ** n
    if count > MAX_TUPLE_ENUM:
        raise ValueError(f"{count} question tuples exceeds the {MAX_TUPLE_ENUM} cap")
    for xt in itertools.product(range(g.x_size), repeat=n):
        for yt in itertools.product(range(g.y_size), repeat=n):
            w = 1.0
            for i in range(n):
                w *= g.mu[xt[i], yt[i]]
            yield xt, yt, w


def win_set(g: Game, n: int, coords) -> Event:
    """Event 'every round in coords is won', over that round's four variables.

    Coordinates are 0-based; variable names stay 1-based (round j maps to
    x{j+1}, y{j+1}, a{j+1}, b{j+1}).
    """
    coords = sorted(set(int(i) for i in coords))
    for i in coords:
        if not 0 <= i < n:
            raise ValueError(f"coordinate {i} outside 0..{n - 1}")
    if not coords:
        return Event((), (), np.array(True))
    names, sizes = [], []
    for i in coords:
        names += [f"x{i + 1}", f"y{i + 1}", f"a{i + 1}", f"b{i + 1}"]
        sizes += [g.x_size, g.y_size, g.a_size, g.b_size]
    if int(np.prod(sizes)) > MAX_TABLE_ENTRIES:
        raise ValueError("win event mask exceeds the table entry cap")
    mask = np.array(True)
    for k in range(len(coords)):
        shape = [1] * (4 * len(coords))
        shape[4 * k: 4 * k + 4] = [g.x_size, g.y_size, g.a_size, g.b_size]
        mask = mask & g.predicate.reshape(shape)
    mask = np.broadcast_to(mask, tuple(sizes)).copy()
    return Event(tuple(names), tuple(sizes), mask)


# ---------------------------------------------------------------------------
# fixtures

def chsh() -> Game:
    """Uniform questions; win iff a xor b = x and y."""
    mu = np.full((2, 2), 0.25)
    pred = np.zeros((2, 2, 2, 2), dtype=bool)
    for x, y, a, b in itertools.product(range(2), repeat=4):
        pred[x, y, a, b] = (a ^ b) == (x & y)
    return Game(2, 2, 2, 2, mu, pred, name="chsh")


def always_win() -> Game:
    """Uniform questions, identically true predicate."""
    mu = np.full((2, 2), 0.25)
    pred = np.ones((2, 2, 2, 2), dtype=bool)
    return Game(2, 2, 2, 2, mu, pred, name="always_win")


def asym3() -> Game:
    """Three questions per side, correlated nonuniform mu, parity predicate."""
    w = np.array([[4.0, 1.0, 1.0],
                  [1.0, 2.0, 1.0],
                  [1.0, 1.0, 3.0]])
    mu = w / w.sum()
    pred = np.zeros((3, 3, 2, 2), dtype=bool)
    for x, y, a, b in itertools.product(range(3), range(3), range(2), range(2)):
        pred[x, y, a, b] = (a ^ b) == ((x + y) % 2)
    return Game(3, 3, 2, 2, mu, pred, name="asym3")


_FIXTURES = {"chsh": chsh, "always_win": always_win, "asym3": asym3}


def fixture(name: str) -> Game:
    try:
        return _FIXTURES[name]()
    except KeyError:
        raise ValueError(f"unknown game fixture {name!r}; have {sorted(_FIXTURES)}") from None


# ---------------------------------------------------------------------------
# text round-trip

def _format_float(v: float) -> str:
    return repr(float(v))


def save_game(g: Game, path) -> None:
    lines = [
        f"name {g.name}",
        f"x_size {g.x_size}",
        f"y_size {g.y_size}",
        f"a_size {g.a_size}",
        f"b_size {g.b_size}",
        "mu " + " ".join(_format_float(v) for v in g.mu.reshape(-1)),
        "predicate " + " ".join(str(int(v)) for v in g.predicate.reshape(-1)),
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_weight(tok: str) -> float:
    if "/" in tok:
        return float(Fraction(tok))
    return float(tok)


def load_game(path) -> Game:
    fields = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, rest = line.partition(" ")
        fields[key] = rest.strip()
    try:
        xs, ys = int(fields["x_size"]), int(fields["y_size"])
        as_, bs = int(fields["a_size"]), int(fields["b_size"])
        mu = np.array([_parse_weight(t) for t in fields["mu"].split()],
                      dtype=np.float64).reshape(xs, ys)
        pred = np.array([int(t) for t in fields["predicate"].split()],
                        dtype=bool).reshape(xs, ys, as_, bs)
    except KeyError as e:
        raise ValueError(f"game file missing field {e.args[0]!r}") from None
    return Game(xs, ys, as_, bs, mu, pred, name=fields.get("name", "custom"))
