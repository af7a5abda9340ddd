"""Exact arithmetic over the group spanned by 1 and declared irrational symbols.

Every number handled by the package is an ``ExactValue``: a rational part plus
rational coefficients on finitely many irrational symbols.  Symbols are
declared together with an enclosure oracle (nested rational intervals) and are
trusted to be linearly independent over the rationals together with 1, so
equality is decided coefficientwise and sign questions terminate by refining
the enclosures.

Value sets ("clopen values sets") are described by a ``GroupDescriptor``:
a subgroup of the rationals given by prime exponents, plus one such subgroup
of coefficients per irrational symbol.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .errors import NonRationalScale, NotInV, PrecisionExhausted

#: Exponent value standing for "all powers of the prime are admitted".
INF = float("inf")

_FracLike = Fraction | int | str


def _frac(x: _FracLike) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


# ---------------------------------------------------------------------------
# irrational symbols and their enclosures
# ---------------------------------------------------------------------------


def _sqrt_enclosure(radicand: int, shift: Fraction) -> Callable[[int], tuple[Fraction, Fraction]]:
    """Dyadic enclosures of sqrt(radicand) + shift, width 2**-k at stage k."""

    @functools.lru_cache(maxsize=64)
    def oracle(k: int) -> tuple[Fraction, Fraction]:
        scale = 1 << k
        a = math.isqrt(radicand * scale * scale)
        lo = Fraction(a, scale) + shift
        hi = Fraction(a + 1, scale) + shift
        return lo, hi

    return oracle


def _digits_enclosure(base: int, digits: str) -> Callable[[int], tuple[Fraction, Fraction]]:
    """Enclosures from an explicit digit expansion 0.d1 d2 ... in the given base.

    Only as many stages as declared digits are available; deeper requests
    raise ``PrecisionExhausted``.
    """

    values = [int(d, base) for d in digits]

    @functools.lru_cache(maxsize=64)
    def oracle(k: int) -> tuple[Fraction, Fraction]:
        # stage k needs enough digits for width <= 2**-k
        n = 1
        while base**n < (1 << k) and n < len(values):
            n += 1
        if base**n < (1 << k):
            raise PrecisionExhausted(
                f"digit oracle has {len(values)} digits, cannot reach width 2^-{k}"
            )
        acc = 0
        for d in values[:n]:
            acc = acc * base + d
        lo = Fraction(acc, base**n)
        return lo, lo + Fraction(1, base**n)

    return oracle


@dataclass(frozen=True)
class IrrationalSymbol:
    """A named irrational constant in (0,1) with a nested-interval oracle.

    Symbols are identified by name: two symbols with equal names are the same
    symbol.  Names must therefore be unique within any one descriptor.  The
    oracle maps a stage k to a rational interval of width at most 2**-k;
    successive intervals are nested.
    """

    name: str
    spec: tuple = field(compare=False)
    _oracle: Callable[[int], tuple[Fraction, Fraction]] = field(compare=False, repr=False)

    def __post_init__(self):
        lo, hi = self.enclosure(4)
        if not (lo >= 0 and hi <= 1):
            raise ValueError(f"symbol {self.name} must lie in (0,1), got [{lo},{hi}]")

    @staticmethod
    def sqrt(name: str, radicand: int, shift: _FracLike = 0) -> "IrrationalSymbol":
        shift = _frac(shift)
        return IrrationalSymbol(name, ("sqrt", radicand, shift), _sqrt_enclosure(radicand, shift))

    @staticmethod
    def digits(name: str, base: int, digits: str) -> "IrrationalSymbol":
        return IrrationalSymbol(name, ("digits", base, digits), _digits_enclosure(base, digits))

    def enclosure(self, k: int) -> tuple[Fraction, Fraction]:
        lo, hi = self._oracle(k)
        return lo, hi

    def __hash__(self):
        return hash(self.name)

    def __lt__(self, other: "IrrationalSymbol") -> bool:
        return self.name < other.name

    def to_json(self) -> dict:
        kind = self.spec[0]
        if kind == "sqrt":
            return {"kind": "sqrt", "radicand": self.spec[1], "shift": format_fraction(self.spec[2])}
        if kind == "digits":
            return {"kind": "digits", "base": self.spec[1], "digits": self.spec[2]}
        raise ValueError(f"symbol {self.name} has no serialisable enclosure")

    @staticmethod
    def from_json(name: str, data: Mapping) -> "IrrationalSymbol":
        if data["kind"] == "sqrt":
            return IrrationalSymbol.sqrt(name, int(data["radicand"]), parse_fraction(data.get("shift", 0)))
        if data["kind"] == "digits":
            return IrrationalSymbol.digits(name, int(data["base"]), data["digits"])
        raise ValueError(f"unknown enclosure kind {data['kind']!r}")


# ---------------------------------------------------------------------------
# exact values
# ---------------------------------------------------------------------------

#: Comparison precision schedule starts at width 2**-_START_BITS and halves.
_START_BITS = 16
_MAX_BITS = 4096


@dataclass(frozen=True)
class ExactValue:
    """rational + sum of rational multiples of irrational symbols, canonical form.

    Zero coefficients are never stored, so equality is plain field equality.
    All arithmetic is exact; comparisons refine symbol enclosures until the
    sign of the (structurally nonzero) difference is determined.
    """

    rational: Fraction = Fraction(0)
    coeffs: tuple[tuple[IrrationalSymbol, Fraction], ...] = ()

    @staticmethod
    def of(q: _FracLike, coeffs: Mapping[IrrationalSymbol, _FracLike] | None = None) -> "ExactValue":
        items = tuple(
            sorted((s, _frac(c)) for s, c in (coeffs or {}).items() if _frac(c) != 0)
        )
        return ExactValue(_frac(q), items)

    # -- structure ---------------------------------------------------------

    @property
    def is_rational(self) -> bool:
        return not self.coeffs

    def coeff(self, symbol: IrrationalSymbol) -> Fraction:
        for s, c in self.coeffs:
            if s == symbol:
                return c
        return Fraction(0)

    def height(self) -> int:
        """max of numerator/denominator magnitudes over all components."""
        h = max(abs(self.rational.numerator), self.rational.denominator)
        for _, c in self.coeffs:
            h = max(h, abs(c.numerator), c.denominator)
        return h

    # -- arithmetic ----------------------------------------------------------

    def _combine(self, other: "ExactValue", sign: int) -> "ExactValue":
        acc = {s: c for s, c in self.coeffs}
        for s, c in other.coeffs:
            acc[s] = acc.get(s, Fraction(0)) + sign * c
        return ExactValue.of(self.rational + sign * other.rational, acc)

    def __add__(self, other: "ExactValue") -> "ExactValue":
        return self._combine(other, 1)

    def __sub__(self, other: "ExactValue") -> "ExactValue":
        return self._combine(other, -1)

    def __neg__(self) -> "ExactValue":
        return ExactValue.of(-self.rational, {s: -c for s, c in self.coeffs})

    def scale(self, k: _FracLike) -> "ExactValue":
        k = _frac(k)
        return ExactValue.of(self.rational * k, {s: c * k for s, c in self.coeffs})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if isinstance(other, ExactValue):
            if other.is_rational:
                return self.scale(other.rational)
            if self.is_rational:
                return other.scale(self.rational)
            raise ArithmeticError("products of two irrational values are not representable")
        return NotImplemented

    __rmul__ = __mul__

    # -- comparisons ---------------------------------------------------------

    def interval(self, bits: int) -> tuple[Fraction, Fraction]:
        """A rational interval containing this value, from stage-``bits`` enclosures."""
        lo = hi = self.rational
        for s, c in self.coeffs:
            slo, shi = s.enclosure(bits)
            if c >= 0:
                lo, hi = lo + c * slo, hi + c * shi
            else:
                lo, hi = lo + c * shi, hi + c * slo
        return lo, hi

    def sign(self) -> int:
        if not self.coeffs:
            q = self.rational
            return (q > 0) - (q < 0)
        # structural zero is handled above; refine from width 2**-16,
        # halving the width each round, until the sign is determined
        bits = _START_BITS
        while bits <= _MAX_BITS:
            lo, hi = self.interval(bits)
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            bits += 1
        raise ArithmeticError(
            "sign undecided at maximal precision; are the declared symbols "
            "really independent of 1 over the rationals?"
        )

    def __lt__(self, other: "ExactValue") -> bool:
        return self is not other and (self - other).sign() < 0

    def __le__(self, other: "ExactValue") -> bool:
        return self is other or (self - other).sign() <= 0

    def __gt__(self, other: "ExactValue") -> bool:
        return self is not other and (self - other).sign() > 0

    def __ge__(self, other: "ExactValue") -> bool:
        return self is other or (self - other).sign() >= 0

    def floor(self) -> int:
        if not self.coeffs:
            return math.floor(self.rational)
        bits = _START_BITS
        while bits <= _MAX_BITS:
            lo, hi = self.interval(bits)
            if math.floor(lo) == math.floor(hi):
                return math.floor(lo)
            bits *= 2
        raise ArithmeticError("floor undecided at maximal precision")

    # -- serialisation -------------------------------------------------------

    def sort_key(self):
        return (
            self.rational.numerator,
            self.rational.denominator,
            tuple((s.name, c.numerator, c.denominator) for s, c in self.coeffs),
        )

    def to_json(self) -> dict:
        out: dict = {"q": format_fraction(self.rational)}
        if self.coeffs:
            out["irr"] = {s.name: format_fraction(c) for s, c in self.coeffs}
        return out

    @staticmethod
    def from_json(data: Mapping, symbols: Mapping[str, IrrationalSymbol]) -> "ExactValue":
        coeffs = {symbols[n]: parse_fraction(c) for n, c in data.get("irr", {}).items()}
        return ExactValue.of(parse_fraction(data["q"]), coeffs)

    def __str__(self):
        parts = []
        if self.rational or not self.coeffs:
            parts.append(format_fraction(self.rational))
        for s, c in self.coeffs:
            parts.append(f"{format_fraction(c)}*{s.name}")
        return " + ".join(parts)


ZERO = ExactValue.of(0)
ONE = ExactValue.of(1)


def format_fraction(q: Fraction) -> str:
    q = _frac(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def parse_fraction(text) -> Fraction:
    return _frac(text)


# ---------------------------------------------------------------------------
# subgroups of Q containing Z, described by prime exponents
# ---------------------------------------------------------------------------


def _prime_factors(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def _is_prime(n: int) -> bool:
    return n >= 2 and _prime_factors(n) == {n: 1}


@dataclass(frozen=True)
class RationalGroup:
    """The subgroup of Q containing Z with 1/p**n admitted iff n <= exponent(p).

    ``default`` is the exponent of every prime not listed in ``exceptions``
    and must be 0 or INF; exceptions store only primes whose exponent differs
    from the default.
    """

    default: float = 0
    exceptions: tuple[tuple[int, float], ...] = ()

    @staticmethod
    def make(default: float = 0, exceptions: Mapping[int, float] | None = None) -> "RationalGroup":
        if default not in (0, INF):
            raise ValueError("default exponent must be 0 or inf")
        cleaned = {}
        for p, e in (exceptions or {}).items():
            if not _is_prime(p):
                raise ValueError(f"{p} is not prime")
            if e != default:
                if e != INF and (not isinstance(e, int) or e < 0):
                    raise ValueError(f"exponent for {p} must be a nonnegative integer or inf")
                cleaned[p] = e
        return RationalGroup(default, tuple(sorted(cleaned.items())))

    #: Z itself.
    @staticmethod
    def integers() -> "RationalGroup":
        return RationalGroup.make(0)

    @staticmethod
    def all_rationals() -> "RationalGroup":
        return RationalGroup.make(INF)

    def exponent(self, p: int) -> float:
        for q, e in self.exceptions:
            if q == p:
                return e
        return self.default

    def contains(self, q: Fraction) -> bool:
        q = _frac(q)
        for p, k in _prime_factors(q.denominator).items():
            if k > self.exponent(p):
                return False
        return True

    @property
    def is_trivial(self) -> bool:
        return self.default == 0 and not self.exceptions

    @property
    def is_all_rationals(self) -> bool:
        return self.default == INF and not self.exceptions

    @property
    def is_ring_like(self) -> bool:
        return all(e in (0, INF) for _, e in self.exceptions)

    def finite_exponent_witness(self) -> tuple[int, int] | None:
        """Smallest prime with exponent outside {0, inf}, with its exponent."""
        for p, e in self.exceptions:
            if e not in (0, INF):
                return p, int(e)
        return None

    def to_json(self) -> dict:
        return {
            "default": "inf" if self.default == INF else "0",
            "exceptions": {str(p): ("inf" if e == INF else int(e)) for p, e in self.exceptions},
        }

    @staticmethod
    def from_json(data: Mapping) -> "RationalGroup":
        default = INF if data.get("default") == "inf" else 0
        exceptions = {
            int(p): (INF if e == "inf" else int(e)) for p, e in data.get("exceptions", {}).items()
        }
        return RationalGroup.make(default, exceptions)


# ---------------------------------------------------------------------------
# group descriptors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Classification:
    group_like: bool
    q_like: bool
    #: True / False / None; None means undecided (irrational components).
    ring_like: bool | None


@dataclass(frozen=True)
class GroupDescriptor:
    """A finitely described group-like set V = G ∩ [0,1].

    G is the rational component plus, per declared symbol s, its coefficient
    group times s.  The set is countably infinite iff the rational component
    is bigger than Z or at least one symbol is declared; ``infinite`` is the
    user's assertion of that fact and is checked against it.
    """

    rational: RationalGroup
    irr: tuple[tuple[IrrationalSymbol, RationalGroup], ...] = ()
    infinite: bool = True

    @staticmethod
    def make(
        rational: RationalGroup,
        irr: Mapping[IrrationalSymbol, RationalGroup] | None = None,
        infinite: bool | None = None,
    ) -> "GroupDescriptor":
        items = tuple(sorted((irr or {}).items(), key=lambda kv: kv[0].name))
        names = [s.name for s, _ in items]
        if len(set(names)) != len(names):
            raise ValueError("duplicate symbol names")
        derived = not rational.is_trivial or bool(items)
        if infinite is None:
            infinite = derived
        return GroupDescriptor(rational, items, infinite and derived)

    # convenient stock descriptors -----------------------------------------

    @staticmethod
    def p_adic(p: int) -> "GroupDescriptor":
        return GroupDescriptor.make(RationalGroup.make(0, {p: INF}))

    @staticmethod
    def dyadic() -> "GroupDescriptor":
        return GroupDescriptor.p_adic(2)

    @staticmethod
    def rationals() -> "GroupDescriptor":
        return GroupDescriptor.make(RationalGroup.all_rationals())

    def symbols(self) -> dict[str, IrrationalSymbol]:
        return {s.name: s for s, _ in self.irr}

    def symbol_group(self, symbol: IrrationalSymbol) -> RationalGroup | None:
        for s, g in self.irr:
            if s == symbol:
                return g
        return None

    @property
    def is_purely_rational(self) -> bool:
        return not self.irr

    # -- membership ----------------------------------------------------------

    def in_group(self, v: ExactValue) -> bool:
        """Membership in G = V + Z (no [0,1] clamp)."""
        if not self.rational.contains(v.rational):
            return False
        for s, c in v.coeffs:
            g = self.symbol_group(s)
            if g is None or not g.contains(c):
                return False
        return True

    def member(self, v: ExactValue) -> bool:
        return self.in_group(v) and v.sign() >= 0 and (v - ONE).sign() <= 0

    # -- classification ------------------------------------------------------

    def classify(self) -> Classification:
        group_like = self.infinite and (not self.rational.is_trivial or bool(self.irr))
        q_like = self.rational.is_all_rationals and all(g.is_all_rationals for _, g in self.irr)
        ring_like: bool | None
        if self.irr:
            ring_like = None
        else:
            ring_like = self.rational.is_ring_like
        return Classification(group_like, q_like, ring_like)

    # -- enumeration ---------------------------------------------------------

    def _rationals_of_height(self, group: RationalGroup, budget: int, with_negative: bool) -> list[Fraction]:
        out = []
        for den in range(1, budget + 1):
            if not group.contains(Fraction(1, den)):
                continue
            lo = -budget if with_negative else 0
            for num in range(lo, budget + 1):
                q = Fraction(num, den)
                if q.denominator == den:  # lowest terms only, avoids duplicates
                    out.append(q)
        return out

    def enumerate_values(self, budget: int) -> list[ExactValue]:
        """Deterministic, prefix-stable listing of V ∩ (0,1] up to the given height.

        Ordered by height, ties broken by (rational numerator, denominator,
        symbol name, coefficient).
        """
        if budget < 1:
            raise ValueError("budget must be >= 1")
        with_irr = bool(self.irr)
        rats = self._rationals_of_height(self.rational, budget, with_negative=with_irr)
        combos: list[dict[IrrationalSymbol, Fraction]] = [{}]
        for s, g in self.irr:
            cands = self._rationals_of_height(g, budget, with_negative=True)
            combos = [{**c, s: x} for c in combos for x in cands]
        seen = set()
        out = []
        for q in rats:
            for coeffs in combos:
                v = ExactValue.of(q, coeffs)
                if v.height() > budget or v in seen:
                    continue
                if v.sign() > 0 and (v - ONE).sign() <= 0:
                    seen.add(v)
                    out.append(v)
        out.sort(key=lambda v: (v.height(), v.sort_key()))
        return out

    def smallest_below(self, w: ExactValue) -> ExactValue:
        """First enumerated element of V strictly below w (w must exceed some element)."""
        budget = 2
        while budget <= 1 << 16:
            for v in self.enumerate_values(budget):
                if v < w:
                    return v
            budget *= 2
        raise NotInV(f"no element of V found below {w}")

    # -- scaling -------------------------------------------------------------

    def scale_value_set(self, a: ExactValue) -> "GroupDescriptor":
        """Descriptor of V_a = {v/a : v in V} ∩ [0,1] for rational a in V."""
        if not a.is_rational or not self.is_purely_rational:
            raise NonRationalScale("scaling needs a rational value over a purely rational set")
        if not self.member(a) or a.sign() <= 0:
            raise NotInV(f"scale {a} is not a positive member of V")
        r = a.rational.numerator
        s = a.rational.denominator
        shift: dict[int, int] = {}
        for p, k in _prime_factors(r).items():
            shift[p] = shift.get(p, 0) + k
        for p, k in _prime_factors(s).items():
            shift[p] = shift.get(p, 0) - k
        exceptions = {p: e for p, e in self.rational.exceptions}
        for p, d in shift.items():
            e = exceptions.get(p, self.rational.default)
            exceptions[p] = e if e == INF else int(e) + d
        if any(e != INF and e < 0 for e in exceptions.values()):
            raise NotInV(f"scaled exponents negative; {a} is not in V")
        return GroupDescriptor.make(RationalGroup.make(self.rational.default, exceptions))

    # -- serialisation -------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "rational": self.rational.to_json(),
            "irrationals": [
                {"name": s.name, "enclosure": s.to_json(), "group": g.to_json()}
                for s, g in self.irr
            ],
        }

    @staticmethod
    def from_json(data: Mapping) -> "GroupDescriptor":
        rational = RationalGroup.from_json(data["rational"])
        irr = {}
        for entry in data.get("irrationals", []):
            s = IrrationalSymbol.from_json(entry["name"], entry["enclosure"])
            irr[s] = RationalGroup.from_json(entry["group"])
        return GroupDescriptor.make(rational, irr, data.get("infinite"))


# ---------------------------------------------------------------------------
# module-level operation aliases matching the operation vocabulary
# ---------------------------------------------------------------------------


def member(v: ExactValue, V: GroupDescriptor) -> bool:
    return V.member(v)


def classify(V: GroupDescriptor) -> Classification:
    return V.classify()


def enumerate_values(V: GroupDescriptor, budget: int) -> list[ExactValue]:
    return V.enumerate_values(budget)


def scale_value_set(V: GroupDescriptor, a: ExactValue) -> GroupDescriptor:
    return V.scale_value_set(a)


def check_all_in(values: Iterable[ExactValue], V: GroupDescriptor, what: str = "value") -> None:
    for v in values:
        if v.sign() <= 0:
            raise NotInV(f"{what} {v} is not positive")
        if not V.member(v):
            raise NotInV(f"{what} {v} is not in V")
