"""
Minimal symbolic engine for the trigonometric-rational expressions that appear when
planar rotations are composed along an articulated vehicle.

Angles are restricted to integer-weighted sums of yaw/steer variables plus a number of
quarter turns (`AngleSum`). Scalars (`ScalarExpr`) are hash-consed DAG nodes: two
structurally equal expressions are the same Python object, so equality is identity and
shared sub-expressions are stored once.
"""
import hashlib
import math
import threading
import weakref
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

from modules.errors import DivisionNearZero, InvalidExpression, UnboundSymbol

DEFAULT_EPS_DIV: float = 1e-12

YAW = 'yaw'
STEER = 'steer'
_KIND_RANK = {YAW: 0, STEER: 1}


@dataclass(frozen=True)
class AngleVar:
    """A yaw angle psi_i or a steering angle theta_{i,k}."""

    kind: str
    unit: int
    wheel: Optional[int] = None

    def __post_init__(self):
        if self.kind not in _KIND_RANK:
            raise ValueError(f"Unknown angle kind: {self.kind}")
        if self.unit < 1:
            raise ValueError(f"Unit index must be >= 1, got {self.unit}")
        if self.kind == YAW and self.wheel is not None:
            raise ValueError("Yaw angles carry no wheel index")
        if self.kind == STEER and (self.wheel is None or self.wheel < 1):
            raise ValueError("Steering angles need a wheel index >= 1")

    @property
    def sort_key(self) -> Tuple[int, int, int]:
        return (self.unit, _KIND_RANK[self.kind], self.wheel or 0)

    @property
    def name(self) -> str:
        if self.kind == YAW:
            return f"psi_{self.unit}"
        return f"theta_{self.unit}_{self.wheel}"

    @classmethod
    def from_name(cls, name: str) -> 'AngleVar':
        parts = name.split('_')
        try:
            if parts[0] == 'psi' and len(parts) == 2:
                return cls(YAW, int(parts[1]))
            if parts[0] == 'theta' and len(parts) == 3:
                return cls(STEER, int(parts[1]), int(parts[2]))
        except ValueError:
            pass
        raise ValueError(f"Not an angle variable name: {name}")

    def as_sum(self) -> 'AngleSum':
        return AngleSum(((self, 1),), 0)

    def __add__(self, other) -> 'AngleSum':
        return self.as_sum() + other

    def __sub__(self, other) -> 'AngleSum':
        return self.as_sum() - other

    def __neg__(self) -> 'AngleSum':
        return -self.as_sum()

    def __str__(self) -> str:
        return self.name


def yaw(unit: int) -> AngleVar:
    return AngleVar(YAW, unit)


def steer(unit: int, wheel: int) -> AngleVar:
    return AngleVar(STEER, unit, wheel)


@dataclass(frozen=True)
class AngleSum:
    """Canonical angle: sum of coefficient * variable plus quarter_turns * pi/2 (mod 2*pi)."""

    terms: Tuple[Tuple[AngleVar, int], ...] = ()
    quarter_turns: int = 0

    def __post_init__(self):
        keys = [var.sort_key for var, _ in self.terms]
        if keys != sorted(set(keys)):
            raise ValueError("AngleSum terms must be sorted and unique; build it with AngleSum.of")
        if any(not isinstance(coeff, int) or coeff == 0 for _, coeff in self.terms):
            raise ValueError("AngleSum coefficients must be non-zero integers")
        if self.quarter_turns not in (0, 1, 2, 3):
            raise ValueError("quarter_turns must be stored modulo 4")

    @classmethod
    def of(cls, terms: Union[Mapping[AngleVar, int], Iterable[Tuple[AngleVar, int]]] = (),
           quarter_turns: int = 0) -> 'AngleSum':
        items = terms.items() if isinstance(terms, Mapping) else terms
        accumulated: Dict[AngleVar, int] = {}
        for var, coeff in items:
            accumulated[var] = accumulated.get(var, 0) + int(coeff)
        ordered = tuple(sorted(((var, coeff) for var, coeff in accumulated.items() if coeff != 0),
                               key=lambda item: item[0].sort_key))
        return cls(ordered, quarter_turns % 4)

    @staticmethod
    def _coerce(other) -> 'AngleSum':
        if isinstance(other, AngleSum):
            return other
        if isinstance(other, AngleVar):
            return other.as_sum()
        if other == 0:
            return AngleSum()
        raise TypeError(f"Cannot combine an AngleSum with {other!r}")

    def __add__(self, other) -> 'AngleSum':
        other = self._coerce(other)
        return AngleSum.of(self.terms + other.terms, self.quarter_turns + other.quarter_turns)

    __radd__ = __add__

    def __neg__(self) -> 'AngleSum':
        return AngleSum.of(((var, -coeff) for var, coeff in self.terms), -self.quarter_turns)

    def __sub__(self, other) -> 'AngleSum':
        return self + (-self._coerce(other))

    def shift(self, quarter_turns: int) -> 'AngleSum':
        return AngleSum(self.terms, (self.quarter_turns + quarter_turns) % 4)

    @property
    def base(self) -> 'AngleSum':
        return AngleSum(self.terms, 0)

    @property
    def is_zero(self) -> bool:
        return not self.terms and self.quarter_turns == 0

    @property
    def leading_coefficient(self) -> int:
        return self.terms[0][1] if self.terms else 0

    @property
    def variables(self) -> Tuple[AngleVar, ...]:
        return tuple(var for var, _ in self.terms)

    @property
    def sort_key(self) -> Tuple:
        return (tuple((var.sort_key, coeff) for var, coeff in self.terms), self.quarter_turns)

    def value(self, bindings: Mapping) -> float:
        total = self.quarter_turns * (math.pi / 2)
        for var, coeff in self.terms:
            total += coeff * _lookup_angle(bindings, var)
        return total

    def __str__(self) -> str:
        parts: List[str] = []
        for var, coeff in self.terms:
            magnitude = '' if abs(coeff) == 1 else f"{abs(coeff)}*"
            sign = '-' if coeff < 0 else '+'
            parts.append(f"{sign} {magnitude}{var.name}")
        if self.quarter_turns:
            parts.append(f"+ {self.quarter_turns}*pi/2")
        if not parts:
            return '0'
        text = ' '.join(parts)
        return text[2:] if text.startswith('+ ') else '-' + text[2:]


def angle(*terms: Tuple[AngleVar, int], quarter_turns: int = 0) -> AngleSum:
    return AngleSum.of(terms, quarter_turns)


def _lookup_angle(bindings: Mapping, var: AngleVar) -> float:
    if var in bindings:
        return float(bindings[var])
    if var.name in bindings:
        return float(bindings[var.name])
    raise UnboundSymbol(var.name)


class ScalarExpr:
    """
    Base class of the expression DAG. Nodes are interned: constructors return the
    existing node when an identical one is still alive. The table holds weak references,
    so nodes nothing else refers to are released.
    """

    __slots__ = ('_digest', '_sort_key', '_simplified', '__weakref__')
    _table: 'weakref.WeakValueDictionary[Tuple, ScalarExpr]' = weakref.WeakValueDictionary()
    _lock = threading.Lock()
    rank: int = 99

    @classmethod
    def _intern(cls, payload: Tuple, fields: Mapping[str, object], detail: Tuple,
                digest_parts: Iterable[str]) -> 'ScalarExpr':
        key = (cls, payload)
        node = ScalarExpr._table.get(key)
        if node is not None:
            return node
        with ScalarExpr._lock:
            node = ScalarExpr._table.get(key)
            if node is None:
                node = object.__new__(cls)
                for name, value in fields.items():
                    object.__setattr__(node, name, value)
                digest = hashlib.blake2b(cls.__name__.encode(), digest_size=12)
                for part in digest_parts:
                    digest.update(b'|' + part.encode())
                object.__setattr__(node, '_digest', digest.hexdigest())
                object.__setattr__(node, '_sort_key', (cls.rank, detail, node._digest))
                object.__setattr__(node, '_simplified', None)
                ScalarExpr._table[key] = node
        return node

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} nodes are immutable")

    def __delattr__(self, name):
        raise AttributeError(f"{type(self).__name__} nodes are immutable")

    def __copy__(self):
        return self

    def __deepcopy__(self, memo):
        return self

    def __reduce__(self):
        raise TypeError("Expressions are serialized with modules.expression_writer")

    @property
    def sort_key(self) -> Tuple:
        return self._sort_key

    @property
    def digest(self) -> str:
        return self._digest

    @property
    def children(self) -> Tuple['ScalarExpr', ...]:
        return ()

    def __add__(self, other) -> 'ScalarExpr':
        return Sum(self, as_expr(other))

    def __radd__(self, other) -> 'ScalarExpr':
        return Sum(as_expr(other), self)

    def __sub__(self, other) -> 'ScalarExpr':
        return Sum(self, Neg(as_expr(other)))

    def __rsub__(self, other) -> 'ScalarExpr':
        return Sum(as_expr(other), Neg(self))

    def __mul__(self, other) -> 'ScalarExpr':
        return Product(self, as_expr(other))

    def __rmul__(self, other) -> 'ScalarExpr':
        return Product(as_expr(other), self)

    def __truediv__(self, other) -> 'ScalarExpr':
        return Quotient(self, as_expr(other))

    def __rtruediv__(self, other) -> 'ScalarExpr':
        return Quotient(as_expr(other), self)

    def __neg__(self) -> 'ScalarExpr':
        return Neg(self)

    def __repr__(self) -> str:
        return to_text(self)


class Const(ScalarExpr):
    """Exact rational constant p/q."""

    __slots__ = ('value',)
    rank = 0

    def __new__(cls, value: Union[int, Fraction, str, float] = 0):
        if isinstance(value, ScalarExpr):
            raise InvalidExpression("Const wraps a number, not an expression")
        value = Fraction(value)
        return cls._intern((value,), {'value': value}, (value,), (str(value),))


class Param(ScalarExpr):
    """Named geometry parameter (or other externally bound scalar)."""

    __slots__ = ('name',)
    rank = 1

    def __new__(cls, name: str):
        if not isinstance(name, str) or not name.isidentifier():
            raise InvalidExpression(f"Parameter names must be identifiers, got {name!r}")
        return cls._intern((name,), {'name': name}, (name,), (name,))


class _Trig(ScalarExpr):
    __slots__ = ('angle',)

    def __new__(cls, angle_arg: Union[AngleSum, AngleVar]):
        if isinstance(angle_arg, AngleVar):
            angle_arg = angle_arg.as_sum()
        if not isinstance(angle_arg, AngleSum):
            raise InvalidExpression(f"{cls.__name__} takes an AngleSum, got {angle_arg!r}")
        return cls._intern((angle_arg,), {'angle': angle_arg}, angle_arg.sort_key, (str(angle_arg),))

    @property
    def function_name(self) -> str:
        return type(self).__name__.lower()


class Sin(_Trig):
    __slots__ = ()
    rank = 2


class Cos(_Trig):
    __slots__ = ()
    rank = 3


def _ordered(nodes: Iterable[ScalarExpr]) -> Tuple[ScalarExpr, ...]:
    return tuple(sorted(nodes, key=lambda node: node.sort_key))


class Sum(ScalarExpr):
    __slots__ = ('terms',)
    rank = 5

    def __new__(cls, *terms):
        terms = tuple(as_expr(term) for term in terms)
        if all(isinstance(term, Const) for term in terms):
            return Const(sum((term.value for term in terms), Fraction(0)))
        if len(terms) == 1:
            return terms[0]
        terms = _ordered(terms)
        return cls._intern((terms,), {'terms': terms}, (), (node.digest for node in terms))

    @property
    def children(self) -> Tuple[ScalarExpr, ...]:
        return self.terms


class Product(ScalarExpr):
    __slots__ = ('factors',)
    rank = 6

    def __new__(cls, *factors):
        factors = tuple(as_expr(factor) for factor in factors)
        if all(isinstance(factor, Const) for factor in factors):
            value = Fraction(1)
            for factor in factors:
                value *= factor.value
            return Const(value)
        if len(factors) == 1:
            return factors[0]
        factors = _ordered(factors)
        return cls._intern((factors,), {'factors': factors}, (), (node.digest for node in factors))

    @property
    def children(self) -> Tuple[ScalarExpr, ...]:
        return self.factors


class Quotient(ScalarExpr):
    __slots__ = ('numerator', 'denominator')
    rank = 7

    def __new__(cls, numerator, denominator):
        numerator, denominator = as_expr(numerator), as_expr(denominator)
        if isinstance(denominator, Const):
            if denominator.value == 0:
                raise InvalidExpression("Quotient denominator is the zero constant")
            if isinstance(numerator, Const):
                return Const(numerator.value / denominator.value)
        return cls._intern((numerator, denominator), {'numerator': numerator, 'denominator': denominator},
                           (), (numerator.digest, denominator.digest))

    @property
    def children(self) -> Tuple[ScalarExpr, ...]:
        return (self.numerator, self.denominator)


class Neg(ScalarExpr):
    __slots__ = ('child',)
    rank = 8

    def __new__(cls, child):
        child = as_expr(child)
        if isinstance(child, Const):
            return Const(-child.value)
        if isinstance(child, Neg):
            return child.child
        return cls._intern((child,), {'child': child}, (), (child.digest,))

    @property
    def children(self) -> Tuple[ScalarExpr, ...]:
        return (self.child,)


ZERO = Const(0)
ONE = Const(1)


def as_expr(value) -> ScalarExpr:
    if isinstance(value, ScalarExpr):
        return value
    if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        return Const(value)
    raise InvalidExpression(f"Cannot use {value!r} as an expression")


# --------------------------------------------------------------------------- simplify

def _split_coefficient(expr: ScalarExpr) -> Tuple[Fraction, Optional[ScalarExpr]]:
    """Split a canonical term into (rational coefficient, unit-coefficient core)."""
    if isinstance(expr, Const):
        return expr.value, None
    if isinstance(expr, Neg):
        coeff, core = _split_coefficient(expr.child)
        return -coeff, core
    if isinstance(expr, Product) and isinstance(expr.factors[0], Const):
        rest = expr.factors[1:]
        return expr.factors[0].value, rest[0] if len(rest) == 1 else Product(*rest)
    if isinstance(expr, Quotient):
        coeff, core = _split_coefficient(expr.numerator)
        return coeff, Quotient(ONE if core is None else core, expr.denominator)
    return Fraction(1), expr


def _with_coefficient(coeff: Fraction, core: Optional[ScalarExpr]) -> ScalarExpr:
    if coeff == 0:
        return ZERO
    if core is None:
        return Const(coeff)
    if coeff < 0:
        return Neg(_with_coefficient(-coeff, core))
    if coeff == 1:
        return core
    if isinstance(core, Product):
        return Product(Const(coeff), *core.factors)
    if isinstance(core, Quotient):
        numerator = None if core.numerator is ONE else core.numerator
        return Quotient(_with_coefficient(coeff, numerator), core.denominator)
    return Product(Const(coeff), core)


def _add(terms: Sequence[ScalarExpr]) -> ScalarExpr:
    constant = Fraction(0)
    coefficients: Dict[ScalarExpr, Fraction] = {}

    def accumulate(term: ScalarExpr, scale: Fraction) -> None:
        nonlocal constant
        coeff, core = _split_coefficient(term)
        coeff *= scale
        if core is None:
            constant += coeff
        elif isinstance(core, Sum):
            for inner in core.terms:
                accumulate(inner, coeff)
        else:
            coefficients[core] = coefficients.get(core, Fraction(0)) + coeff

    for term in terms:
        accumulate(term, Fraction(1))

    items: List[Tuple[Optional[ScalarExpr], Fraction]] = [(None, constant)] if constant != 0 else []
    items.extend(sorted(((core, coeff) for core, coeff in coefficients.items() if coeff != 0),
                        key=lambda item: item[0].sort_key))
    if not items:
        return ZERO
    sign = -1 if items[0][1] < 0 else 1
    built = [_with_coefficient(sign * coeff, core) for core, coeff in items]
    result = built[0] if len(built) == 1 else Sum(*built)
    return Neg(result) if sign < 0 else result


def _product_of(factors: List[ScalarExpr]) -> Optional[ScalarExpr]:
    if not factors:
        return None
    return factors[0] if len(factors) == 1 else Product(*factors)


def _multiply(numerator: Sequence[ScalarExpr], denominator: Sequence[ScalarExpr] = ()) -> ScalarExpr:
    coeff = Fraction(1)
    top: List[ScalarExpr] = []
    bottom: List[ScalarExpr] = []

    def gather(factor: ScalarExpr, upper: bool) -> None:
        nonlocal coeff
        if isinstance(factor, Const):
            if upper:
                coeff *= factor.value
            elif factor.value == 0:
                raise InvalidExpression("Division by an expression that simplifies to zero")
            else:
                coeff /= factor.value
        elif isinstance(factor, Neg):
            coeff = -coeff
            gather(factor.child, upper)
        elif isinstance(factor, Product):
            for inner in factor.factors:
                gather(inner, upper)
        elif isinstance(factor, Quotient):
            gather(factor.numerator, upper)
            gather(factor.denominator, not upper)
        else:
            (top if upper else bottom).append(factor)

    for factor in numerator:
        gather(factor, True)
    for factor in denominator:
        gather(factor, False)
    if coeff == 0:
        return ZERO

    kept: List[ScalarExpr] = []
    for factor in top:
        for position, candidate in enumerate(bottom):
            if candidate is factor:
                del bottom[position]
                break
        else:
            kept.append(factor)

    sign = -1 if coeff < 0 else 1
    num_core, den_core = _product_of(kept), _product_of(bottom)
    if den_core is None:
        result = _with_coefficient(abs(coeff), num_core)
    else:
        result = Quotient(_with_coefficient(abs(coeff), num_core), den_core)
    return Neg(result) if sign < 0 else result


# sin/cos of (a + q*pi/2) rewritten as (+-1, sin|cos of a)
_SIN_TURNS = {0: (1, Sin), 1: (1, Cos), 2: (-1, Sin), 3: (-1, Cos)}
_COS_TURNS = {0: (1, Cos), 1: (-1, Sin), 2: (-1, Cos), 3: (1, Sin)}


def _trig(kind: type, angle_arg: AngleSum) -> ScalarExpr:
    table = _SIN_TURNS if kind is Sin else _COS_TURNS
    sign, function = table[angle_arg.quarter_turns]
    base = angle_arg.base
    if base.leading_coefficient < 0:
        base = -base
        if function is Sin:
            sign = -sign
    if not base.terms:
        return Const(0 if function is Sin else sign)
    node = function(base)
    return Neg(node) if sign < 0 else node


def simplify(expr: ScalarExpr) -> ScalarExpr:
    """
    Canonicalize an expression: constant folding, flattening, like-term collection,
    sign hoisting, quarter-turn and odd/even trig rewrites, and cancellation of identical
    numerator/denominator factors. Results are memoized on the (immutable) nodes.
    """
    cached = expr._simplified
    if cached is not None:
        return cached
    if isinstance(expr, (Const, Param)):
        result = expr
    elif isinstance(expr, _Trig):
        result = _trig(type(expr), expr.angle)
    elif isinstance(expr, Neg):
        coeff, core = _split_coefficient(simplify(expr.child))
        result = _with_coefficient(-coeff, core)
    elif isinstance(expr, Sum):
        result = _add([simplify(term) for term in expr.terms])
    elif isinstance(expr, Product):
        result = _multiply([simplify(factor) for factor in expr.factors])
    elif isinstance(expr, Quotient):
        denominator = simplify(expr.denominator)
        if denominator is ZERO:
            raise InvalidExpression("Quotient denominator simplifies to zero")
        result = _multiply([simplify(expr.numerator)], [denominator])
    else:
        raise InvalidExpression(f"Unknown node type {type(expr).__name__}")
    object.__setattr__(expr, '_simplified', result)
    return result


# --------------------------------------------------------------------------- traversal

def topological_order(roots: Iterable[ScalarExpr]) -> List[ScalarExpr]:
    """Unique nodes reachable from roots, children before parents."""
    order: List[ScalarExpr] = []
    seen: Set[int] = set()
    for root in roots:
        if id(root) in seen:
            continue
        stack: List[Tuple[ScalarExpr, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for child in reversed(node.children):
                if id(child) not in seen:
                    stack.append((child, False))
    return order


def node_count(roots: Iterable[ScalarExpr]) -> int:
    return len(topological_order(roots))


def free_symbols(expr: ScalarExpr) -> Tuple[Set[AngleVar], Set[str]]:
    angles: Set[AngleVar] = set()
    params: Set[str] = set()
    for node in topological_order([expr]):
        if isinstance(node, _Trig):
            angles.update(node.angle.variables)
        elif isinstance(node, Param):
            params.add(node.name)
    return angles, params


# --------------------------------------------------------------------------- evaluation

def evaluate(expr: ScalarExpr, bindings: Mapping, params: Optional[Mapping[str, float]] = None,
             eps_div: float = DEFAULT_EPS_DIV) -> float:
    """
    Evaluate with IEEE doubles. `bindings` maps AngleVar (or its name) to radians.

    Raises:
        UnboundSymbol: If an angle or parameter is missing.
        DivisionNearZero: If a denominator's magnitude is below eps_div.
    """
    params = params or {}
    values: Dict[int, float] = {}
    for node in topological_order([expr]):
        if isinstance(node, Const):
            value = float(node.value)
        elif isinstance(node, Param):
            if node.name not in params:
                raise UnboundSymbol(node.name)
            value = float(params[node.name])
        elif isinstance(node, Sin):
            value = math.sin(node.angle.value(bindings))
        elif isinstance(node, Cos):
            value = math.cos(node.angle.value(bindings))
        elif isinstance(node, Sum):
            value = math.fsum(values[id(term)] for term in node.terms)
        elif isinstance(node, Product):
            value = 1.0
            for factor in node.factors:
                value *= values[id(factor)]
        elif isinstance(node, Quotient):
            denominator = values[id(node.denominator)]
            if abs(denominator) < eps_div:
                raise DivisionNearZero(node.denominator, denominator, eps_div)
            value = values[id(node.numerator)] / denominator
        else:
            value = -values[id(node.child)]
        values[id(node)] = value
    return values[id(expr)]


class CompiledExprs:
    """
    Straight-line evaluator for a fixed list of roots: one local assignment per unique
    DAG node, denominators guarded by eps_div. Angles are passed positionally in the
    order of `angle_vars`, parameters by name.
    """

    def __init__(self, roots: Sequence[ScalarExpr], angle_vars: Sequence[AngleVar],
                 param_names: Iterable[str], eps_div: float = DEFAULT_EPS_DIV):
        self.roots: Tuple[ScalarExpr, ...] = tuple(roots)
        self.angle_vars: Tuple[AngleVar, ...] = tuple(angle_vars)
        self.param_names: Tuple[str, ...] = tuple(sorted(param_names))
        self.eps_div = eps_div
        self._nodes = topological_order(self.roots)
        index = {id(node): position for position, node in enumerate(self._nodes)}
        known_angles = set(self.angle_vars)
        known_params = set(self.param_names)

        lines = ['def _evaluate(_a, _p):']
        lines += [f"    A_{var.name} = _a[{position}]" for position, var in enumerate(self.angle_vars)]
        lines += [f"    P_{name} = _p[{name!r}]" for name in self.param_names]
        for position, node in enumerate(self._nodes):
            lines.append(f"    v{position} = {self._source(node, index, position, known_angles, known_params)}")
        lines.append('    return (' + ''.join(f"v{index[id(root)]}, " for root in self.roots) + ')')
        namespace = {'_sin': math.sin, '_cos': math.cos, '_guard': self._guard, '_half_pi': math.pi / 2}
        exec(compile('\n'.join(lines), '<compiled-expressions>', 'exec'), namespace)
        self._function: Callable = namespace['_evaluate']

    @staticmethod
    def _angle_source(angle_arg: AngleSum, known_angles: Set[AngleVar]) -> str:
        parts = []
        for var, coeff in angle_arg.terms:
            if var not in known_angles:
                raise UnboundSymbol(var.name)
            parts.append(f"{coeff}*A_{var.name}")
        if angle_arg.quarter_turns:
            parts.append(f"{angle_arg.quarter_turns}*_half_pi")
        return ' + '.join(parts) if parts else '0.0'

    def _source(self, node: ScalarExpr, index: Mapping[int, int], position: int,
                known_angles: Set[AngleVar], known_params: Set[str]) -> str:
        if isinstance(node, Const):
            return repr(float(node.value))
        if isinstance(node, Param):
            if node.name not in known_params:
                raise UnboundSymbol(node.name)
            return f"P_{node.name}"
        if isinstance(node, _Trig):
            return f"_{node.function_name}({self._angle_source(node.angle, known_angles)})"
        if isinstance(node, Sum):
            return ' + '.join(f"v{index[id(term)]}" for term in node.terms)
        if isinstance(node, Product):
            return ' * '.join(f"v{index[id(factor)]}" for factor in node.factors)
        if isinstance(node, Quotient):
            return f"v{index[id(node.numerator)]} / _guard(v{index[id(node.denominator)]}, {position})"
        return f"-v{index[id(node.child)]}"

    def _guard(self, value: float, position: int) -> float:
        if -self.eps_div < value < self.eps_div:
            raise DivisionNearZero(self._nodes[position].denominator, value, self.eps_div)
        return value

    def __call__(self, angles: Sequence[float], params: Mapping[str, float]) -> Tuple[float, ...]:
        try:
            return self._function(angles, params)
        except KeyError as e:
            raise UnboundSymbol(str(e.args[0])) from e


# --------------------------------------------------------------------------- text

def _parenthesized(expr: ScalarExpr) -> str:
    text = to_text(expr)
    if isinstance(expr, (Sum, Quotient, Neg)) or (isinstance(expr, Const) and expr.value.denominator != 1):
        return f"({text})"
    return text


def to_text(expr: ScalarExpr) -> str:
    """Infix rendering (tree expansion; meant for small expressions and diagnostics)."""
    if isinstance(expr, Const):
        return str(expr.value)
    if isinstance(expr, Param):
        return expr.name
    if isinstance(expr, _Trig):
        return f"{expr.function_name}({expr.angle})"
    if isinstance(expr, Sum):
        text = to_text(expr.terms[0])
        for term in expr.terms[1:]:
            if isinstance(term, Neg):
                text += f" - {_parenthesized(term.child)}"
            else:
                text += f" + {to_text(term)}"
        return text
    if isinstance(expr, Product):
        return '*'.join(_parenthesized(factor) for factor in expr.factors)
    if isinstance(expr, Quotient):
        return f"{_parenthesized(expr.numerator)}/{_parenthesized(expr.denominator)}"
    return f"-{_parenthesized(expr.child)}"


# --------------------------------------------------------------------------- SO(2) algebra

@dataclass(frozen=True)
class Vec2Sym:
    x: ScalarExpr
    y: ScalarExpr

    @classmethod
    def of(cls, x, y) -> 'Vec2Sym':
        return cls(simplify(as_expr(x)), simplify(as_expr(y)))

    def __add__(self, other: 'Vec2Sym') -> 'Vec2Sym':
        return Vec2Sym.of(Sum(self.x, other.x), Sum(self.y, other.y))

    def __sub__(self, other: 'Vec2Sym') -> 'Vec2Sym':
        return Vec2Sym.of(Sum(self.x, Neg(other.x)), Sum(self.y, Neg(other.y)))

    def scale(self, factor: ScalarExpr) -> 'Vec2Sym':
        return Vec2Sym.of(Product(self.x, factor), Product(self.y, factor))

    def __iter__(self):
        return iter((self.x, self.y))


@dataclass(frozen=True)
class Mat2Sym:
    """2x2 symbolic matrix; `angle` is set when the matrix is known to be R(angle)."""

    entries: Tuple[Tuple[ScalarExpr, ScalarExpr], Tuple[ScalarExpr, ScalarExpr]]
    angle: Optional[AngleSum] = field(default=None, compare=False)

    def row(self, index: int) -> Tuple[ScalarExpr, ScalarExpr]:
        return self.entries[index]

    def transpose(self) -> 'Mat2Sym':
        if self.angle is not None:
            return rot(-self.angle)
        (a, b), (c, d) = self.entries
        return Mat2Sym(((a, c), (b, d)))

    def __matmul__(self, other):
        if isinstance(other, Mat2Sym):
            if self.angle is not None and other.angle is not None:
                return rot(self.angle + other.angle)
            entries = tuple(
                tuple(simplify(Sum(Product(self.entries[r][0], other.entries[0][c]),
                                   Product(self.entries[r][1], other.entries[1][c])))
                      for c in range(2))
                for r in range(2))
            return Mat2Sym(entries)
        if isinstance(other, Vec2Sym):
            (a, b), (c, d) = self.entries
            return Vec2Sym.of(Sum(Product(a, other.x), Product(b, other.y)),
                              Sum(Product(c, other.x), Product(d, other.y)))
        return NotImplemented


def rot(angle_arg: Union[AngleSum, AngleVar, int] = 0) -> Mat2Sym:
    """R(a) = [[cos a, -sin a], [sin a, cos a]] with quarter turns folded into the atoms."""
    angle_arg = AngleSum._coerce(angle_arg)
    cos_a = _trig(Cos, angle_arg)
    sin_a = _trig(Sin, angle_arg)
    return Mat2Sym(((cos_a, simplify(Neg(sin_a))), (sin_a, cos_a)), angle=angle_arg)


def transpose_rot(angle_arg: Union[AngleSum, AngleVar, int] = 0) -> Mat2Sym:
    """R(a)^T = R(-a)."""
    return rot(-AngleSum._coerce(angle_arg))
