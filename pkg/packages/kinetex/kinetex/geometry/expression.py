"""
Boundary graphs given as expression strings in y1, y2.

Only numbers, the variables y1 and y2, the operators + - * / ^ and the
functions sin, cos, exp are accepted; the string is then handed to sympy,
which supplies exact derivatives up to third order.
"""

from __future__ import annotations

import re
from typing import Callable

import numpy as np
import sympy

from ..errors import ConfigurationError

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|(y1|y2)|(sin|cos|exp)|([-+*/^()]))")

Y1, Y2 = sympy.symbols("y1 y2", real=True)
_NAMESPACE = {"y1": Y1, "y2": Y2, "sin": sympy.sin, "cos": sympy.cos, "exp": sympy.exp}

# (order in y1, order in y2) for every derivative a chart needs
DERIVATIVE_ORDERS = {
    "rho": (0, 0),
    "r1": (1, 0),
    "r2": (0, 1),
    "r11": (2, 0),
    "r12": (1, 1),
    "r22": (0, 2),
    "r111": (3, 0),
    "r112": (2, 1),
    "r122": (1, 2),
    "r222": (0, 3),
}


def _validate_tokens(text: str) -> None:
    pos = 0
    text = text.rstrip()
    if not text:
        raise ConfigurationError("empty chart expression", module="geometry")
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if match is None or match.end() == pos:
            raise ConfigurationError(
                f"unexpected character {text[pos]!r} at position {pos} in {text!r}",
                module="geometry",
            )
        pos = match.end()


def parse_expression(text: str) -> sympy.Expr:
    """Parse `text` into a sympy expression in y1, y2."""
    _validate_tokens(text)
    try:
        expr = sympy.sympify(text.replace("^", "**"), locals=_NAMESPACE)
    except (sympy.SympifyError, SyntaxError, TypeError) as e:
        raise ConfigurationError(f"cannot parse chart expression {text!r}: {e}", module="geometry") from e
    if not isinstance(expr, sympy.Expr) or not expr.free_symbols <= {Y1, Y2}:
        raise ConfigurationError(f"chart expression {text!r} must depend on y1, y2 only", module="geometry")
    return expr


def compile_derivatives(expr: sympy.Expr) -> dict[str, Callable[[np.ndarray, np.ndarray], np.ndarray]]:
    """Numpy evaluators for rho and its partial derivatives up to third order."""
    out = {}
    for name, (k1, k2) in DERIVATIVE_ORDERS.items():
        d = expr
        if k1:
            d = sympy.diff(d, Y1, k1)
        if k2:
            d = sympy.diff(d, Y2, k2)
        fn = sympy.lambdify((Y1, Y2), d, "numpy")

        def evaluate(y1, y2, _fn=fn):
            y1, y2 = np.broadcast_arrays(np.asarray(y1, dtype=float), np.asarray(y2, dtype=float))
            return np.broadcast_to(np.asarray(_fn(y1, y2), dtype=float), y1.shape).copy()

        out[name] = evaluate
    return out
