"""Exact dynamical-system backends and their set algebra.

Three backends share one interface: finite metric spaces, piecewise-linear
interval maps on [0, 1] and one-step subshifts of finite type. Every decision
(intersection, inclusion, diameter) is made with exact rationals.

Set representations:
- ``FiniteSystem``: ``frozenset`` of point names.
- ``PLIntervalMap``: sympy ``Interval``/``Union``/``FiniteSet``; open pieces
  touching 0 or 1 may be closed there (relatively open in [0, 1]).
- ``ShiftSystem``: ``frozenset`` of words, one cylinder per word, kept as a
  prefix antichain with complete sibling families merged into their parent.
"""
import logging
from abc import ABC, abstractmethod
from bisect import bisect_right
from functools import cached_property
from itertools import combinations
from pathlib import Path
from typing import Annotated, Any, Iterable, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, field_serializer, model_validator
from sympy import FiniteSet, Interval, Rational, S, oo
from sympy import Union as SetUnion

from src.errors import EmptySetError, InvalidBackend, StructuralError
from src.helpers import ExactRational, load_settings, to_rational

logger = logging.getLogger(__name__)

ZERO = Rational(0)
ONE = Rational(1)


def _power_of_half(k: int) -> Rational:
    return Rational(1, 2 ** k)


class System(BaseModel, ABC):
    """A compact metric space with a continuous self-map, seen through its open sets."""

    model_config = ConfigDict(frozen=True)

    name: str = ""

    @abstractmethod
    def whole(self) -> Any: ...

    @abstractmethod
    def is_empty(self, u: Any) -> bool: ...

    @abstractmethod
    def image(self, u: Any) -> Any: ...

    @abstractmethod
    def fatten(self, u: Any, eps: Rational) -> Any:
        """``{x : dist(x, u) < eps}``; ``eps == 0`` leaves ``u`` unchanged."""

    def closure(self, u: Any) -> Any:
        return u

    @abstractmethod
    def intersects(self, a: Any, b: Any) -> bool: ...

    @abstractmethod
    def subset(self, a: Any, b: Any) -> bool: ...

    @abstractmethod
    def intersection(self, a: Any, b: Any) -> Any: ...

    @abstractmethod
    def union(self, *sets: Any) -> Any: ...

    @abstractmethod
    def diam(self, u: Any) -> Rational: ...

    def mesh(self, cover: Iterable) -> Rational:
        return max((self.diam(u) for u in cover), default=ZERO)

    @abstractmethod
    def lebesgue_lower_bound(self, cover: list) -> Rational: ...

    @abstractmethod
    def contains(self, u: Any, point: Any) -> bool: ...

    @abstractmethod
    def apply(self, point: Any) -> Any: ...

    @abstractmethod
    def parse_point(self, text: str) -> Any: ...

    def format_point(self, point: Any) -> str:
        return str(point)

    @abstractmethod
    def split(self, u: Any, granularity: int) -> list:
        """Open pieces whose union is ``u``; finer as ``granularity`` grows."""

    def candidate_pairs(self, left: list, right: list) -> Iterable[tuple[int, int]]:
        """Index pairs that may intersect; a superset of the intersecting pairs."""
        return ((i, j) for i in range(len(left)) for j in range(len(right)))

    @abstractmethod
    def set_to_json(self, u: Any) -> Any: ...

    @abstractmethod
    def set_from_json(self, data: Any) -> Any: ...

    def describe(self, u: Any) -> str:
        return str(u)

    def check_cover(self, cover: list) -> None:
        """Raise :class:`StructuralError` unless ``cover`` is a cover without empty elements."""
        if not cover:
            raise StructuralError("a cover needs at least one element")
        for u in cover:
            if self.is_empty(u):
                raise StructuralError("a cover element is empty")
        if not self.subset(self.whole(), self.union(*cover)):
            raise StructuralError("cover elements do not cover the space")


# --- finite metric spaces ---------------------------------------------------


class FiniteSystem(System):
    kind: Literal["finite"] = "finite"
    points: tuple[str, ...]
    map: dict[str, str]
    metric: Optional[dict[str, dict[str, ExactRational]]] = None

    @model_validator(mode="before")
    @classmethod
    def _matrix_to_mapping(cls, data: Any) -> Any:
        if isinstance(data, dict) and isinstance(data.get("metric"), list):
            points = list(data.get("points", []))
            rows = data["metric"]
            data = {**data, "metric": {p: dict(zip(points, row)) for p, row in zip(points, rows)}}
        return data

    @model_validator(mode="after")
    def _check_space(self) -> "FiniteSystem":
        if not self.points:
            raise StructuralError("a finite system needs at least one point")
        if len(set(self.points)) != len(self.points):
            raise StructuralError("point names must be unique")
        for p in self.points:
            if self.map.get(p) not in self.points:
                raise StructuralError(f"map is not a total self-map at {p!r}")
        if self.metric is None:
            return self
        for p in self.points:
            for q in self.points:
                d = self.metric.get(p, {}).get(q)
                if d is None:
                    raise StructuralError(f"metric lacks d({p}, {q})")
                if p == q and d != 0:
                    raise StructuralError(f"d({p}, {p}) must be 0")
                if p != q and not d > 0:
                    raise StructuralError(f"d({p}, {q}) must be positive")
                if d != self.metric[q][p]:
                    raise StructuralError(f"metric is not symmetric at ({p}, {q})")
        for p in self.points:
            for q in self.points:
                for r in self.points:
                    if self.distance(p, r) > self.distance(p, q) + self.distance(q, r):
                        raise StructuralError(f"triangle inequality fails for ({p}, {q}, {r})")
        return self

    def distance(self, p: str, q: str) -> Rational:
        if self.metric is None:
            return ZERO if p == q else ONE
        return self.metric[p][q]

    def whole(self) -> frozenset:
        return frozenset(self.points)

    def is_empty(self, u: frozenset) -> bool:
        return not u

    def image(self, u: frozenset) -> frozenset:
        return frozenset(self.map[p] for p in u)

    def fatten(self, u: frozenset, eps: Rational) -> frozenset:
        if eps == 0:
            return u
        return frozenset(x for x in self.points if any(self.distance(x, p) < eps for p in u))

    def intersects(self, a: frozenset, b: frozenset) -> bool:
        return not a.isdisjoint(b)

    def subset(self, a: frozenset, b: frozenset) -> bool:
        return a <= b

    def intersection(self, a: frozenset, b: frozenset) -> frozenset:
        return a & b

    def union(self, *sets: frozenset) -> frozenset:
        return frozenset().union(*sets)

    def diam(self, u: frozenset) -> Rational:
        if not u:
            raise EmptySetError("the empty set has no diameter")
        return max((self.distance(p, q) for p, q in combinations(sorted(u), 2)), default=ZERO)

    def lebesgue_lower_bound(self, cover: list) -> Rational:
        """Smallest diameter of a subset lying in no single element (exhaustive)."""
        self.check_cover(cover)
        points = sorted(self.points)
        best = None
        for size in range(2, len(points) + 1):
            for combo in combinations(points, size):
                chosen = frozenset(combo)
                if any(chosen <= u for u in cover):
                    continue
                d = self.diam(chosen)
                if best is None or d < best:
                    best = d
        if best is None:
            return self.diam(self.whole()) or ONE
        return best

    def contains(self, u: frozenset, point: str) -> bool:
        return point in u

    def apply(self, point: str) -> str:
        return self.map[point]

    def parse_point(self, text: str) -> str:
        if text not in self.points:
            raise StructuralError(f"{text!r} is not a point of this system")
        return text

    def split(self, u: frozenset, granularity: int) -> list:
        d = self.diam(u)
        if d == 0 or granularity <= 1:
            return [u]
        radius = d / granularity
        balls = {frozenset(q for q in u if self.distance(p, q) < radius) for p in u}
        return sorted(balls, key=sorted)

    def set_to_json(self, u: frozenset) -> list:
        return sorted(u)

    def set_from_json(self, data: list) -> frozenset:
        u = frozenset(data)
        unknown = u - set(self.points)
        if unknown:
            raise StructuralError(f"unknown points {sorted(unknown)}")
        return u

    def describe(self, u: frozenset) -> str:
        return "{" + ", ".join(sorted(u)) + "}"


# --- piecewise-linear interval maps -----------------------------------------

# (lo, hi, lo_open, hi_open)
Piece = tuple


def _pieces(s: Any) -> list:
    if s is S.EmptySet:
        return []
    if isinstance(s, Interval):
        return [(s.start, s.end, bool(s.left_open), bool(s.right_open))]
    if isinstance(s, FiniteSet):
        return [(p, p, False, False) for p in s.args]
    if isinstance(s, SetUnion):
        pieces = [piece for arg in s.args for piece in _pieces(arg)]
        return sorted(pieces, key=lambda p: (p[0], p[2], p[1]))
    raise StructuralError(f"unsupported interval set {s!r}")


def _from_pieces(pieces: Iterable) -> Any:
    return SetUnion(*(Interval(lo, hi, lo_open, hi_open) for lo, hi, lo_open, hi_open in pieces))


def _piece_has(p: Piece, x: Rational) -> bool:
    lo, hi, lo_open, hi_open = p
    if x < lo or x > hi:
        return False
    if x == lo and lo_open or x == hi and hi_open:
        return False
    return True


def _pieces_meet(p: Piece, q: Piece) -> bool:
    lo, hi = max(p[0], q[0]), min(p[1], q[1])
    if lo < hi:
        return True
    if lo > hi:
        return False
    return _piece_has(p, lo) and _piece_has(q, lo)


def _piece_inside(inner: Piece, outer: Piece) -> bool:
    lo_ok = outer[0] < inner[0] or (outer[0] == inner[0] and (not outer[2] or inner[2]))
    hi_ok = inner[1] < outer[1] or (inner[1] == outer[1] and (not outer[3] or inner[3]))
    return lo_ok and hi_ok


def _format_piece(p: Piece) -> str:
    lo, hi, lo_open, hi_open = p
    if lo == hi:
        return f"{{{lo}}}"
    return f"{'(' if lo_open else '['}{lo}, {hi}{')' if hi_open else ']'}"


class PLIntervalMap(System):
    """Continuous map of [0, 1], linear between consecutive breakpoints."""

    kind: Literal["pl_interval"] = "pl_interval"
    breakpoints: tuple[ExactRational, ...]
    values: tuple[ExactRational, ...]
    overlap: Optional[ExactRational] = None

    @model_validator(mode="after")
    def _check_graph(self) -> "PLIntervalMap":
        if len(self.breakpoints) < 2 or len(self.breakpoints) != len(self.values):
            raise StructuralError("need matching breakpoints and values, at least two of each")
        if self.breakpoints[0] != 0 or self.breakpoints[-1] != 1:
            raise StructuralError("breakpoints must start at 0 and end at 1")
        for a, b in zip(self.breakpoints, self.breakpoints[1:]):
            if not a < b:
                raise StructuralError(f"breakpoints must increase strictly ({a} >= {b})")
        for v in self.values:
            if v < 0 or v > 1:
                raise StructuralError(f"value {v} lies outside [0, 1]")
        return self

    @cached_property
    def _segments(self) -> list:
        return list(zip(self.breakpoints, self.breakpoints[1:], self.values, self.values[1:]))

    def _overlap(self) -> Rational:
        return self.overlap if self.overlap is not None else load_settings().refinement.pl_overlap

    def whole(self) -> Any:
        return Interval(0, 1)

    def is_empty(self, u: Any) -> bool:
        return not _pieces(u)

    def apply(self, x: Rational) -> Rational:
        for b0, b1, v0, v1 in self._segments:
            if b0 <= x <= b1:
                return v0 + (v1 - v0) * (x - b0) / (b1 - b0)
        raise StructuralError(f"{x} lies outside [0, 1]")

    def image(self, u: Any) -> Any:
        """Exact image, one interval per linear segment met by each piece of ``u``."""
        out = []
        for lo, hi, lo_open, hi_open in _pieces(u):
            for b0, b1, v0, v1 in self._segments:
                s, t = max(lo, b0), min(hi, b1)
                s_open = lo_open and s == lo
                t_open = hi_open and t == hi
                if s > t or (s == t and (s_open or t_open)):
                    continue
                fs = v0 + (v1 - v0) * (s - b0) / (b1 - b0)
                ft = v0 + (v1 - v0) * (t - b0) / (b1 - b0)
                if v0 == v1 or s == t:
                    out.append((fs, fs, False, False))
                elif fs < ft:
                    out.append((fs, ft, s_open, t_open))
                else:
                    out.append((ft, fs, t_open, s_open))
        return _from_pieces(out)

    def fatten(self, u: Any, eps: Rational) -> Any:
        if eps == 0:
            return u
        out = []
        for lo, hi, _, _ in _pieces(u):
            a, b = lo - eps, hi + eps
            out.append((max(a, ZERO), min(b, ONE), not a < 0, not b > 1))
        return _from_pieces(out)

    def closure(self, u: Any) -> Any:
        return _from_pieces((lo, hi, False, False) for lo, hi, _, _ in _pieces(u))

    def intersects(self, a: Any, b: Any) -> bool:
        return any(_pieces_meet(p, q) for p in _pieces(a) for q in _pieces(b))

    def subset(self, a: Any, b: Any) -> bool:
        outer = _pieces(b)
        return all(any(_piece_inside(p, q) for q in outer) for p in _pieces(a))

    def intersection(self, a: Any, b: Any) -> Any:
        out = []
        for p in _pieces(a):
            for q in _pieces(b):
                lo, hi = max(p[0], q[0]), min(p[1], q[1])
                lo_open = (p[0] == lo and p[2]) or (q[0] == lo and q[2])
                hi_open = (p[1] == hi and p[3]) or (q[1] == hi and q[3])
                out.append((lo, hi, lo_open, hi_open))
        return _from_pieces(out)

    def union(self, *sets: Any) -> Any:
        return SetUnion(*sets)

    def diam(self, u: Any) -> Rational:
        pieces = _pieces(u)
        if not pieces:
            raise EmptySetError("the empty set has no diameter")
        return max(p[1] for p in pieces) - min(p[0] for p in pieces)

    def lebesgue_lower_bound(self, cover: list) -> Rational:
        """Infimum over x of the best margin any piece leaves around x.

        A piece closed at 0 or 1 has no boundary on that side. The infimum of
        this piecewise-linear margin is attained at 0, 1 or where a rising
        side meets a falling side, so only those points are evaluated.
        """
        self.check_cover(cover)
        sides = []
        for u in cover:
            for lo, hi, lo_open, hi_open in _pieces(u):
                a = -oo if lo == 0 and not lo_open else lo
                b = oo if hi == 1 and not hi_open else hi
                sides.append((a, b))
        lefts = {a for a, _ in sides if a != -oo}
        rights = {b for _, b in sides if b != oo}
        candidates = {ZERO, ONE} | {(a + b) / 2 for a in lefts for b in rights}
        margin = min(
            max(min(x - a, b - x) for a, b in sides)
            for x in candidates
            if 0 <= x <= 1
        )
        if not margin > 0:
            raise StructuralError("cover has no positive Lebesgue number")
        return min(margin, ONE)

    def contains(self, u: Any, point: Rational) -> bool:
        return any(_piece_has(p, point) for p in _pieces(u))

    def parse_point(self, text: str) -> Rational:
        x = to_rational(text)
        if x < 0 or x > 1:
            raise StructuralError(f"{text} lies outside [0, 1]")
        return x

    def split(self, u: Any, granularity: int) -> list:
        """Grid of ``granularity`` overlapping open pieces per interval of ``u``."""
        margin_ratio = self._overlap()
        out = []
        for lo, hi, lo_open, hi_open in _pieces(u):
            if lo == hi or granularity <= 1:
                out.append(_from_pieces([(lo, hi, lo_open, hi_open)]))
                continue
            h = (hi - lo) / granularity
            margin = margin_ratio * h
            for k in range(granularity):
                left = (lo, lo_open) if k == 0 else (lo + k * h - margin, True)
                right = (hi, hi_open) if k == granularity - 1 else (lo + (k + 1) * h + margin, True)
                out.append(Interval(left[0], right[0], left[1], right[1]))
        return out

    def candidate_pairs(self, left: list, right: list) -> Iterable[tuple[int, int]]:
        """Sweep over closed hulls: only pairs whose hulls meet are returned."""
        hulls = [(s.inf, s.sup) for s in right]
        order = sorted(range(len(right)), key=lambda j: hulls[j][0])
        starts = [hulls[j][0] for j in order]
        for i, s in enumerate(left):
            lo, hi = s.inf, s.sup
            for j in order[: bisect_right(starts, hi)]:
                if hulls[j][1] >= lo:
                    yield i, j

    def set_to_json(self, u: Any) -> list:
        return [[str(lo), str(hi), lo_open, hi_open] for lo, hi, lo_open, hi_open in _pieces(u)]

    def set_from_json(self, data: list) -> Any:
        return _from_pieces(
            (to_rational(lo), to_rational(hi), bool(lo_open), bool(hi_open)) for lo, hi, lo_open, hi_open in data
        )

    def describe(self, u: Any) -> str:
        pieces = _pieces(u)
        return " ∪ ".join(_format_piece(p) for p in pieces) if pieces else "∅"


# --- one-step subshifts -----------------------------------------------------

# A point is an eventually periodic sequence ``prefix + cycle + cycle + ...``
ShiftPoint = tuple[str, str]


class ShiftSystem(System):
    """Left shift on the sequences whose consecutive symbols are allowed transitions.

    ``d(x, y) = 2^-k`` where ``k`` is the first index at which ``x`` and ``y``
    differ. ``transitions`` lists the allowed two-symbol words; omitted means
    the full shift.
    """

    kind: Literal["shift"] = "shift"
    alphabet: tuple[str, ...]
    transitions: Optional[frozenset[str]] = None

    @model_validator(mode="after")
    def _check_alphabet(self) -> "ShiftSystem":
        if not self.alphabet:
            raise StructuralError("alphabet is empty")
        if len(set(self.alphabet)) != len(self.alphabet) or any(len(s) != 1 for s in self.alphabet):
            raise StructuralError("symbols must be distinct single characters")
        for word in self.transitions or ():
            if len(word) != 2 or word[0] not in self.alphabet or word[1] not in self.alphabet:
                raise StructuralError(f"transition {word!r} is not a two-symbol word over the alphabet")
        if self.transitions is not None and not self.transitions:
            raise StructuralError("transition set is empty")
        for s in self.alphabet:
            if not self.followers[s]:
                raise InvalidBackend(f"symbol {s!r} has no allowed successor")
        return self

    @field_serializer("transitions")
    def _dump_transitions(self, transitions: Optional[frozenset]) -> Optional[list]:
        return sorted(transitions) if transitions is not None else None

    @cached_property
    def allowed(self) -> frozenset:
        if self.transitions is None:
            return frozenset(a + b for a in self.alphabet for b in self.alphabet)
        return self.transitions

    @cached_property
    def followers(self) -> dict:
        return {s: tuple(t for t in self.alphabet if s + t in self.allowed) for s in self.alphabet}

    @cached_property
    def predecessors(self) -> dict:
        return {s: tuple(t for t in self.alphabet if t + s in self.allowed) for s in self.alphabet}

    def _options(self, word: str) -> tuple:
        return self.alphabet if not word else self.followers[word[-1]]

    def is_allowed(self, word: str) -> bool:
        if any(s not in self.alphabet for s in word):
            return False
        return all(word[k:k + 2] in self.allowed for k in range(len(word) - 1))

    def extensions(self, word: str, n: int) -> list:
        """Allowed words extending ``word`` by exactly ``n`` symbols, in lexicographic order."""
        current = [word]
        for _ in range(n):
            current = [w + s for w in current for s in self._options(w)]
        return current

    def words(self, n: int) -> list:
        return self.extensions("", n)

    def normalize(self, words: Iterable[str]) -> frozenset:
        """Canonical prefix-antichain form with complete sibling families merged."""
        current = {w for w in words if self.is_allowed(w)}
        while True:
            current = {w for w in current if not any(w[:k] in current for k in range(len(w)))}
            merged = False
            for w in sorted(current, key=lambda w: (-len(w), w)):
                if not w:
                    continue
                parent = w[:-1]
                family = {parent + s for s in self._options(parent)}
                if family <= current:
                    current = (current - family) | {parent}
                    merged = True
                    break
            if not merged:
                return frozenset(current)

    def whole(self) -> frozenset:
        return frozenset({""})

    def is_empty(self, u: frozenset) -> bool:
        return not u

    def image(self, u: frozenset) -> frozenset:
        out = set()
        for w in u:
            if len(w) >= 2:
                out.add(w[1:])
            elif len(w) == 1:
                out.update(self.followers[w])
            else:
                out.update(s for s in self.alphabet if self.predecessors[s])
        return self.normalize(out)

    def fatten(self, u: frozenset, eps: Rational) -> frozenset:
        """Points closer than ``eps`` agree on the first ``k`` symbols, ``k`` minimal with ``2^-k < eps``."""
        if eps == 0:
            return u
        k = 0
        while not _power_of_half(k) < eps:
            k += 1
        return self.normalize(w[:k] if k <= len(w) else w for w in u)

    def intersects(self, a: frozenset, b: frozenset) -> bool:
        return any(x.startswith(y) or y.startswith(x) for x in a for y in b)

    def subset(self, a: frozenset, b: frozenset) -> bool:
        return self.normalize(a | b) == self.normalize(b)

    def intersection(self, a: frozenset, b: frozenset) -> frozenset:
        out = set()
        for x in a:
            for y in b:
                if x.startswith(y):
                    out.add(x)
                elif y.startswith(x):
                    out.add(y)
        return self.normalize(out)

    def union(self, *sets: frozenset) -> frozenset:
        return self.normalize(frozenset().union(*sets))

    def _agreement_length(self, word: str) -> Optional[int]:
        """Length of the prefix shared by all points of ``C(word)``; ``None`` for a single point."""
        length = len(word)
        state = word[-1] if word else None
        options = self._options(word)
        seen = set()
        while len(options) == 1:
            if state in seen:
                return None
            seen.add(state)
            state = options[0]
            length += 1
            options = self.followers[state]
        return length

    def diam(self, u: frozenset) -> Rational:
        if not u:
            raise EmptySetError("the empty set has no diameter")
        best = ZERO
        for w in u:
            length = self._agreement_length(w)
            if length is not None:
                best = max(best, _power_of_half(length))
        for x, y in combinations(sorted(u), 2):
            k = 0
            while k < min(len(x), len(y)) and x[k] == y[k]:
                k += 1
            best = max(best, _power_of_half(k))
        return best

    def lebesgue_lower_bound(self, cover: list) -> Rational:
        """``2^-k`` for the least ``k`` such that every cylinder of length ``k+1`` lies in one element."""
        self.check_cover(cover)
        cap = self.diam(self.whole()) or ONE
        longest = max(len(w) for u in cover for w in u)
        for k in range(longest + 1):
            if all(any(any(x.startswith(w) for w in u) for u in cover) for x in self.words(k + 1)):
                return min(_power_of_half(k), cap)
        raise StructuralError("cover elements do not cover the space")

    def contains(self, u: frozenset, point: ShiftPoint) -> bool:
        n = max((len(w) for w in u), default=0)
        return any(self._expand(point, n).startswith(w) for w in u)

    def _expand(self, point: ShiftPoint, n: int) -> str:
        prefix, cycle = point
        return (prefix + cycle * (n // len(cycle) + 1))[:n]

    def apply(self, point: ShiftPoint) -> ShiftPoint:
        prefix, cycle = point
        if prefix:
            return prefix[1:], cycle
        return "", cycle[1:] + cycle[0]

    def parse_point(self, text: str) -> ShiftPoint:
        """``"01(10)"`` is ``01`` followed by ``10`` repeated; a bare word repeats itself."""
        text = text.strip()
        if text.endswith(")") and "(" in text:
            prefix, _, cycle = text[:-1].partition("(")
        else:
            prefix, cycle = "", text
        if not cycle or not self.is_allowed(prefix + cycle + cycle[0]):
            raise StructuralError(f"{text!r} is not an eventually periodic point of this shift")
        return prefix, cycle

    def format_point(self, point: ShiftPoint) -> str:
        return f"{point[0]}({point[1]})"

    def split(self, u: frozenset, granularity: int) -> list:
        """Cylinders extending each word by ``log2(granularity)`` symbols (at least one)."""
        extra = max(1, granularity.bit_length() - 1)
        return [frozenset({x}) for w in sorted(u) for x in self.extensions(w, extra)]

    def set_to_json(self, u: frozenset) -> list:
        return sorted(u)

    def set_from_json(self, data: list) -> frozenset:
        bad = [w for w in data if not self.is_allowed(w)]
        if bad:
            raise StructuralError(f"words {bad} are not allowed")
        return self.normalize(data)

    def describe(self, u: frozenset) -> str:
        return " ∪ ".join(f"C({w})" for w in sorted(u)) if u else "∅"


SystemSpec = Annotated[Union[FiniteSystem, PLIntervalMap, ShiftSystem], Field(discriminator="kind")]

_SYSTEM_ADAPTER = TypeAdapter(SystemSpec)


def system_from_dict(data: dict) -> System:
    return _SYSTEM_ADAPTER.validate_python(data)


def system_to_dict(system: System) -> dict:
    return system.model_dump(mode="json", exclude_none=True)


def load_system(path: Union[str, Path]) -> System:
    """Read a YAML (or JSON) system spec and validate it into a backend."""
    with open(path, 'r') as f:
        data = yaml.safe_load(f)
    if not isinstance(data, dict):
        raise StructuralError(f"{path} does not hold a system spec mapping")
    system = system_from_dict(data)
    logger.debug("loaded %s system %r from %s", system.kind, system.name, path)
    return system
