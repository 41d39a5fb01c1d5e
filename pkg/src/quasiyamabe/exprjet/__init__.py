"""Expression language and jet (truncated Taylor) arithmetic."""

from .evaluate import ExprDomainError, derivative, eval_float, eval_jet
from .jet import Jet, JetSpace, OrderExceededError, jeinsum, jet_space, jlinear, stack
from .parser import (
    BinOp,
    Call,
    Const,
    Expr,
    ExprBindError,
    ExprError,
    ExprSyntaxError,
    Neg,
    Num,
    Var,
    as_expr,
    bind,
    parse,
    to_source,
    variables,
)

__all__ = [
    "BinOp",
    "Call",
    "Const",
    "Expr",
    "ExprBindError",
    "ExprDomainError",
    "ExprError",
    "ExprSyntaxError",
    "Jet",
    "JetSpace",
    "Neg",
    "Num",
    "OrderExceededError",
    "Var",
    "as_expr",
    "bind",
    "derivative",
    "eval_float",
    "eval_jet",
    "jeinsum",
    "jet_space",
    "jlinear",
    "parse",
    "stack",
    "to_source",
    "variables",
]
