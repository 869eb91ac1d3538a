"""Exact closed-form scalar functions on a 3-d chart.

Expression trees over {+, -, *, /, neg, integer powers, exp, sin, cos, ln}
with exact symbolic partial derivatives.  Curvature checks need second
derivatives of metric components at 1e-8 tolerances, which rules out
finite differencing; every derivative here is another exact tree.

Trees are immutable after construction (derivative results are cached on
the node, which is the only internal mutation) and safe to evaluate from
concurrent workers.  Any non-finite intermediate turns into DomainError
carrying the offending subexpression rather than a silent NaN.

Constant folding in the constructors is value-preserving on the common
domain: 0*f folds to 0, which extends the domain of the folded tree to
points where f itself would not evaluate.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

AXES = ("x", "y", "z")


class DomainError(ArithmeticError):
    """Evaluation left the field's domain: division by zero, ln of a
    non-positive value, or overflow to a non-finite number."""

    def __init__(self, message, subexpression=None):
        if subexpression is not None:
            message = f"{message} in '{subexpression.to_text()}'"
        super().__init__(message)
        self.subexpression = subexpression


class ParseError(ValueError):
    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


@dataclass(frozen=True)
class Point:
    """Chart coordinates. Components must be finite."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"non-finite {name} coordinate: {v!r}")

    def as_tuple(self):
        return (self.x, self.y, self.z)


class ScalarField:
    """Base expression node.

    Subclasses implement ``_eval(x, y, z, memo)``, ``_diff(axis)`` and
    ``_text()``.  ``memo`` maps ``id(node) -> value`` so shared subtrees
    are evaluated once per point; ``eval_fields`` shares one memo across
    many fields evaluated at the same point.
    """

    __slots__ = ("_dcache",)
    _prec = 4  # atom level; binary nodes override

    def __init__(self):
        self._dcache = {}

    def eval(self, p: Point) -> float:
        return self._eval(p.x, p.y, p.z, {})

    def __call__(self, p: Point) -> float:
        return self.eval(p)

    def partial(self, axis: str) -> "ScalarField":
        """Exact partial derivative along a chart axis; nestable."""
        if axis not in AXES:
            raise ValueError(f"unknown axis {axis!r}, expected one of {AXES}")
        d = self._dcache.get(axis)
        if d is None:
            d = self._diff(axis)
            self._dcache[axis] = d
        return d

    def to_text(self) -> str:
        """Render in the expression grammar; parse(to_text(f)) evaluates
        identically to f."""
        return self._text()

    # -- arithmetic sugar used by the builders ---------------------------
    def __add__(self, other):
        return add(self, as_field(other))

    def __radd__(self, other):
        return add(as_field(other), self)

    def __sub__(self, other):
        return sub(self, as_field(other))

    def __rsub__(self, other):
        return sub(as_field(other), self)

    def __mul__(self, other):
        return mul(self, as_field(other))

    def __rmul__(self, other):
        return mul(as_field(other), self)

    def __truediv__(self, other):
        return div(self, as_field(other))

    def __rtruediv__(self, other):
        return div(as_field(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, n):
        return powi(self, n)

    def __repr__(self):
        return f"<ScalarField {self.to_text()}>"


class Const(ScalarField):
    __slots__ = ("value",)

    def __init__(self, value):
        super().__init__()
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"non-finite constant: {value!r}")
        self.value = value

    @property
    def _prec(self):
        return 4 if self.value >= 0 else 2.5

    def _eval(self, x, y, z, memo):
        return self.value

    def _diff(self, axis):
        return ZERO

    def _text(self):
        return repr(self.value)


class Coord(ScalarField):
    __slots__ = ("axis", "index")

    def __init__(self, axis):
        super().__init__()
        if axis not in AXES:
            raise ValueError(f"unknown axis {axis!r}")
        self.axis = axis
        self.index = AXES.index(axis)

    def _eval(self, x, y, z, memo):
        return (x, y, z)[self.index]

    def _diff(self, axis):
        return ONE if axis == self.axis else ZERO

    def _text(self):
        return self.axis


class _Binary(ScalarField):
    __slots__ = ("left", "right")
    _op = "?"
    _prec = 1

    def __init__(self, left, right):
        super().__init__()
        self.left = left
        self.right = right

    def _text(self):
        lt = self.left._text()
        rt = self.right._text()
        if self.left._prec < self._prec:
            lt = f"({lt})"
        # right operand needs parens at equal precedence for - and /
        if self.right._prec < self._prec or (
            self.right._prec == self._prec and self._op in ("-", "/")
        ):
            rt = f"({rt})"
        return f"{lt} {self._op} {rt}"


class Add(_Binary):
    __slots__ = ()
    _op = "+"
    _prec = 1

    def _eval(self, x, y, z, memo):
        k = id(self)
        v = memo.get(k)
        if v is None:
            v = self.left._eval(x, y, z, memo) + self.right._eval(x, y, z, memo)
            if not math.isfinite(v):
                raise DomainError("non-finite value", self)
            memo[k] = v
        return v

    def _diff(self, axis):
        return add(self.left.partial(axis), self.right.partial(axis))


class Sub(_Binary):
    __slots__ = ()
    _op = "-"
    _prec = 1

    def _eval(self, x, y, z, memo):
        k = id(self)
        v = memo.get(k)
        if v is None:
            v = self.left._eval(x, y, z, memo) - self.right._eval(x, y, z, memo)
            if not math.isfinite(v):
                raise DomainError("non-finite value", self)
            memo[k] = v
        return v

    def _diff(self, axis):
        return sub(self.left.partial(axis), self.right.partial(axis))


class Mul(_Binary):
    __slots__ = ()
    _op = "*"
    _prec = 2

    def _eval(self, x, y, z, memo):
        k = id(self)
        v = memo.get(k)
        if v is None:
            v = self.left._eval(x, y, z, memo) * self.right._eval(x, y, z, memo)
            if not math.isfinite(v):
                raise DomainError("non-finite value", self)
            memo[k] = v
        return v

    def _diff(self, axis):
        return add(
            mul(self.left.partial(axis), self.right),
            mul(self.left, self.right.partial(axis)),
        )


class Div(_Binary):
    __slots__ = ()
    _op = "/"
    _prec = 2

    def _eval(self, x, y, z, memo):
        k = id(self)
        v = memo.get(k)
        if v is None:
            num = self.left._eval(x, y, z, memo)
            den = self.right._eval(x, y, z, memo)
            try:
                v = num / den
            except ZeroDivisionError:
                raise DomainError("division by zero", self) from None
            if not math.isfinite(v):
                raise DomainError("non-finite value", self)
            memo[k] = v
        return v

    def _diff(self, axis):
        # l'/r - l*r'/r^2
        return sub(
            div(self.left.partial(axis), self.right),
            div(mul(self.left, self.right.partial(axis)), mul(self.right, self.right)),
        )


class Neg(ScalarField):
    __slots__ = ("child",)
    _prec = 2.5

    def __init__(self, child):
        super().__init__()
        self.child = child

    def _eval(self, x, y, z, memo):
        return -self.child._eval(x, y, z, memo)

    def _diff(self, axis):
        return neg(self.child.partial(axis))

    def _text(self):
        ct = self.child._text()
        if self.child._prec < 3:  # anything below pow/atom level
            ct = f"({ct})"
        return f"-{ct}"


class Pow(ScalarField):
    """Integer power. General exponents go through exp(n*ln(base))."""

    __slots__ = ("base", "exponent")
    _prec = 3

    def __init__(self, base, exponent):
        super().__init__()
        if not isinstance(exponent, int) or isinstance(exponent, bool):
            raise TypeError(f"integer exponent required, got {exponent!r}")
        self.base = base
        self.exponent = exponent

    def _eval(self, x, y, z, memo):
        k = id(self)
        v = memo.get(k)
        if v is None:
            b = self.base._eval(x, y, z, memo)
            try:
                v = b**self.exponent
            except (ZeroDivisionError, OverflowError):
                raise DomainError("power out of domain", self) from None
            if not math.isfinite(v):
                raise DomainError("non-finite value", self)
            memo[k] = v
        return v

    def _diff(self, axis):
        return mul(
            mul(Const(self.exponent), powi(self.base, self.exponent - 1)),
            self.base.partial(axis),
        )

    def _text(self):
        bt = self.base._text()
        if self.base._prec < 4:
            bt = f"({bt})"
        return f"{bt}^{self.exponent}"


class _Func(ScalarField):
    __slots__ = ("arg",)
    _name = "?"

    def __init__(self, arg):
        super().__init__()
        self.arg = arg

    def _text(self):
        return f"{self._name}({self.arg._text()})"


class Exp(_Func):
    __slots__ = ()
    _name = "exp"

    def _eval(self, x, y, z, memo):
        k = id(self)
        v = memo.get(k)
        if v is None:
            try:
                v = math.exp(self.arg._eval(x, y, z, memo))
            except OverflowError:
                raise DomainError("exp overflow", self) from None
            memo[k] = v
        return v

    def _diff(self, axis):
        return mul(self, self.arg.partial(axis))


class Sin(_Func):
    __slots__ = ()
    _name = "sin"

    def _eval(self, x, y, z, memo):
        k = id(self)
        v = memo.get(k)
        if v is None:
            v = math.sin(self.arg._eval(x, y, z, memo))
            memo[k] = v
        return v

    def _diff(self, axis):
        return mul(cos(self.arg), self.arg.partial(axis))


class Cos(_Func):
    __slots__ = ()
    _name = "cos"

    def _eval(self, x, y, z, memo):
        k = id(self)
        v = memo.get(k)
        if v is None:
            v = math.cos(self.arg._eval(x, y, z, memo))
            memo[k] = v
        return v

    def _diff(self, axis):
        return neg(mul(sin(self.arg), self.arg.partial(axis)))


class Ln(_Func):
    __slots__ = ()
    _name = "ln"

    def _eval(self, x, y, z, memo):
        k = id(self)
        v = memo.get(k)
        if v is None:
            a = self.arg._eval(x, y, z, memo)
            if a <= 0.0:
                raise DomainError("ln of non-positive value", self)
            v = math.log(a)
            memo[k] = v
        return v

    def _diff(self, axis):
        return div(self.arg.partial(axis), self.arg)


ZERO = Const(0.0)
ONE = Const(1.0)
X = Coord("x")
Y = Coord("y")
Z = Coord("z")


def as_field(v) -> ScalarField:
    if isinstance(v, ScalarField):
        return v
    if isinstance(v, (int, float)):
        return Const(v)
    raise TypeError(f"cannot interpret {v!r} as a scalar field")


def is_zero(f: ScalarField) -> bool:
    return isinstance(f, Const) and f.value == 0.0


def _const_value(f):
    return f.value if isinstance(f, Const) else None


# -- folding constructors (value-preserving) -----------------------------

def add(a, b):
    ca, cb = _const_value(a), _const_value(b)
    if ca is not None and cb is not None and math.isfinite(ca + cb):
        return Const(ca + cb)
    if ca == 0.0:
        return b
    if cb == 0.0:
        return a
    return Add(a, b)


def sub(a, b):
    ca, cb = _const_value(a), _const_value(b)
    if ca is not None and cb is not None and math.isfinite(ca - cb):
        return Const(ca - cb)
    if cb == 0.0:
        return a
    if ca == 0.0:
        return neg(b)
    return Sub(a, b)


def mul(a, b):
    ca, cb = _const_value(a), _const_value(b)
    if ca is not None and cb is not None and math.isfinite(ca * cb):
        return Const(ca * cb)
    if ca == 0.0 or cb == 0.0:
        return ZERO
    if ca == 1.0:
        return b
    if cb == 1.0:
        return a
    return Mul(a, b)


def div(a, b):
    ca, cb = _const_value(a), _const_value(b)
    if ca is not None and cb is not None and cb != 0.0 and math.isfinite(ca / cb):
        return Const(ca / cb)
    if ca == 0.0:
        return ZERO
    if cb == 1.0:
        return a
    return Div(a, b)


def neg(a):
    ca = _const_value(a)
    if ca is not None:
        return Const(-ca)
    if isinstance(a, Neg):
        return a.child
    return Neg(a)


def powi(base, n):
    if not isinstance(n, int) or isinstance(n, bool):
        raise TypeError(f"integer exponent required, got {n!r}")
    if n == 0:
        return ONE
    if n == 1:
        return base
    cb = _const_value(base)
    if cb is not None:
        try:
            v = cb**n
        except (ZeroDivisionError, OverflowError):
            return Pow(base, n)
        if math.isfinite(v):
            return Const(v)
    return Pow(base, n)


def exp(a):
    a = as_field(a)
    ca = _const_value(a)
    if ca is not None:
        try:
            return Const(math.exp(ca))
        except OverflowError:
            pass
    return Exp(a)


def sin(a):
    a = as_field(a)
    ca = _const_value(a)
    if ca is not None:
        return Const(math.sin(ca))
    return Sin(a)


def cos(a):
    a = as_field(a)
    ca = _const_value(a)
    if ca is not None:
        return Const(math.cos(ca))
    return Cos(a)


def ln(a):
    a = as_field(a)
    ca = _const_value(a)
    if ca is not None and ca > 0.0:
        return Const(math.log(ca))
    return Ln(a)


def eval_fields(fields, p: Point):
    """Evaluate many fields at one point with a shared memo, so subtrees
    shared across fields (chart functions inside metric components) are
    computed once."""
    memo = {}
    x, y, z = p.x, p.y, p.z
    return [f._eval(x, y, z, memo) for f in fields]


# -- parsing --------------------------------------------------------------
#
#   expr   := term (('+'|'-') term)*
#   term   := factor (('*'|'/') factor)*
#   factor := ('-')? atom ('^' integer)?
#   atom   := number | 'x'|'y'|'z' | func '(' expr ')' | '(' expr ')'
#   func   := 'exp'|'sin'|'cos'|'ln'

_NUMBER = re.compile(r"(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?")
_NAME = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_FUNCS = {"exp": exp, "sin": sin, "cos": cos, "ln": ln}


class _Parser:
    def __init__(self, text):
        self.text = text
        self.pos = 0

    def _skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _peek(self):
        self._skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def _expect(self, ch):
        if self._peek() != ch:
            raise ParseError(f"expected '{ch}'", self.pos)
        self.pos += 1

    def parse(self):
        e = self.expr()
        self._skip_ws()
        if self.pos != len(self.text):
            raise ParseError(f"unexpected {self.text[self.pos]!r}", self.pos)
        return e

    def expr(self):
        e = self.term()
        while True:
            c = self._peek()
            if c == "+":
                self.pos += 1
                e = add(e, self.term())
            elif c == "-":
                self.pos += 1
                e = sub(e, self.term())
            else:
                return e

    def term(self):
        e = self.factor()
        while True:
            c = self._peek()
            if c == "*":
                self.pos += 1
                e = mul(e, self.factor())
            elif c == "/":
                self.pos += 1
                e = div(e, self.factor())
            else:
                return e

    def factor(self):
        negate = False
        if self._peek() == "-":
            self.pos += 1
            negate = True
        e = self.atom()
        if self._peek() == "^":
            self.pos += 1
            e = powi(e, self._integer())
        return neg(e) if negate else e

    def _integer(self):
        self._skip_ws()
        start = self.pos
        sign = 1
        if self._peek() == "-":
            self.pos += 1
            sign = -1
        self._skip_ws()
        digits = ""
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            digits += self.text[self.pos]
            self.pos += 1
        if not digits:
            raise ParseError("expected integer exponent", start)
        if self.pos < len(self.text) and self.text[self.pos] in ".eE":
            raise ParseError("expected integer exponent", start)
        return sign * int(digits)

    def atom(self):
        self._skip_ws()
        if self.pos >= len(self.text):
            raise ParseError("unexpected end of input", self.pos)
        c = self.text[self.pos]
        if c == "(":
            self.pos += 1
            e = self.expr()
            self._expect(")")
            return e
        m = _NUMBER.match(self.text, self.pos)
        if m:
            self.pos = m.end()
            return Const(float(m.group()))
        m = _NAME.match(self.text, self.pos)
        if m:
            name = m.group()
            if name in AXES:
                self.pos = m.end()
                return Coord(name)
            if name in _FUNCS:
                self.pos = m.end()
                self._expect("(")
                e = self.expr()
                self._expect(")")
                return _FUNCS[name](e)
            raise ParseError(f"unknown identifier {name!r}", self.pos)
        raise ParseError(f"unexpected {c!r}", self.pos)


def parse_field(text: str) -> ScalarField:
    """Parse an expression in the config grammar into a ScalarField."""
    if not isinstance(text, str):
        raise TypeError(f"expected expression string, got {type(text).__name__}")
    return _Parser(text).parse()
