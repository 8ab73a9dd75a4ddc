"""AST and static types for the mini pthreads-style C dialect.

Expression and statement nodes are plain dataclasses. Positions (line/col)
and inferred types are excluded from equality so that structural comparison
of transformed programs is stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class IntType:
    def __str__(self) -> str:
        return "int"


@dataclass(frozen=True)
class MutexType:
    def __str__(self) -> str:
        return "mutex"


@dataclass(frozen=True)
class ThreadIdType:
    def __str__(self) -> str:
        return "thread_t"


@dataclass(frozen=True)
class VoidType:
    def __str__(self) -> str:
        return "void"


@dataclass(frozen=True)
class StructType:
    name: str

    def __str__(self) -> str:
        return f"struct {self.name}"


@dataclass(frozen=True)
class PointerType:
    pointee: "Type"

    def __str__(self) -> str:
        return f"{self.pointee}*"


@dataclass(frozen=True)
class ArrayType:
    element: "Type"
    size: int

    def __str__(self) -> str:
        return f"{self.element}[{self.size}]"


@dataclass(frozen=True)
class FuncType:
    params: tuple["Type", ...]
    ret: "Type"

    def __str__(self) -> str:
        args = ", ".join(str(p) for p in self.params)
        return f"{self.ret}({args})"


Type = Union[
    IntType, MutexType, ThreadIdType, VoidType, StructType, PointerType, ArrayType, FuncType
]

INT = IntType()
MUTEX = MutexType()
THREAD_ID = ThreadIdType()
VOID = VoidType()
MUTEX_PTR = PointerType(MUTEX)


def is_pointer(t: Type | None) -> bool:
    return isinstance(t, PointerType)


def is_fnptr(t: Type | None) -> bool:
    return isinstance(t, PointerType) and isinstance(t.pointee, FuncType)


def points_to_values(t: Type | None) -> bool:
    """True if a cell of this type holds values the pointer analysis tracks."""
    return is_pointer(t) and not is_fnptr(t)


# ---------------------------------------------------------------------------
# expressions


@dataclass
class IntLit:
    value: int
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)
    typ: Type | None = field(default=None, compare=False)


@dataclass
class VarRef:
    name: str  # fully qualified after resolution (func::name for locals)
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)
    typ: Type | None = field(default=None, compare=False)


@dataclass
class FuncRef:
    name: str
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)
    typ: Type | None = field(default=None, compare=False)  # decayed PointerType(FuncType)


@dataclass
class Unary:
    op: str  # & * ! -
    operand: "Expr"
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)
    typ: Type | None = field(default=None, compare=False)


@dataclass
class Binary:
    op: str  # == != < <= > >= + -
    left: "Expr"
    right: "Expr"
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)
    typ: Type | None = field(default=None, compare=False)


@dataclass
class FieldAccess:
    base: "Expr"
    name: str
    arrow: bool  # p->f vs s.f
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)
    typ: Type | None = field(default=None, compare=False)


@dataclass
class Index:
    base: "Expr"
    index: "Expr"
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)
    typ: Type | None = field(default=None, compare=False)


@dataclass
class Malloc:
    alloc_type: Type
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)
    typ: Type | None = field(default=None, compare=False)


Expr = Union[IntLit, VarRef, FuncRef, Unary, Binary, FieldAccess, Index, Malloc]


# ---------------------------------------------------------------------------
# statements


@dataclass
class Decl:
    name: str
    typ: Type
    line: int = field(default=0, compare=False)


@dataclass
class Assign:
    lhs: Expr
    rhs: Expr
    line: int = field(default=0, compare=False)


@dataclass
class CallStmt:
    callee: Expr  # FuncRef after fp-call removal
    args: list[Expr]
    lhs: Expr | None  # receiving lvalue, if any
    line: int = field(default=0, compare=False)


@dataclass
class If:
    cond: Expr
    then: "Block"
    els: "Block"
    line: int = field(default=0, compare=False)


@dataclass
class While:
    cond: Expr
    body: "Block"
    line: int = field(default=0, compare=False)


@dataclass
class LockStmt:
    arg: Expr
    line: int = field(default=0, compare=False)


@dataclass
class UnlockStmt:
    arg: Expr
    line: int = field(default=0, compare=False)


@dataclass
class CreateStmt:
    tid: Expr  # out-argument, thread_t*
    fn: Expr
    arg: Expr
    line: int = field(default=0, compare=False)


@dataclass
class JoinStmt:
    tid: Expr
    ret: Expr | None  # receiving lvalue, if any
    line: int = field(default=0, compare=False)


@dataclass
class Return:
    expr: Expr | None
    line: int = field(default=0, compare=False)


@dataclass
class ExitJump:
    """Synthetic goto-to-exit produced by the single-exit pass."""

    line: int = field(default=0, compare=False)


@dataclass
class Block:
    stmts: list["Stmt"]
    line: int = field(default=0, compare=False)


Stmt = Union[
    Decl, Assign, CallStmt, If, While, LockStmt, UnlockStmt, CreateStmt, JoinStmt,
    Return, ExitJump, Block,
]


# ---------------------------------------------------------------------------
# program structure


@dataclass
class Function:
    name: str
    ret: Type
    params: list[Decl]
    locals: list[Decl]
    body: Block
    line: int = field(default=0, compare=False)

    @property
    def func_type(self) -> FuncType:
        return FuncType(tuple(p.typ for p in self.params), self.ret)


@dataclass
class Program:
    functions: dict[str, Function]
    globals: dict[str, Decl]
    structs: dict[str, list[Decl]]
    entry: str = "main"
    var_types: dict[str, Type] = field(default_factory=dict, compare=False)
    warnings: list[str] = field(default_factory=list, compare=False)


def expr_vars(e: Expr) -> set[str]:
    """Variable identifiers referenced by an expression (function ids excluded)."""
    out: set[str] = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if isinstance(n, VarRef):
            out.add(n.name)
        elif isinstance(n, Unary):
            stack.append(n.operand)
        elif isinstance(n, Binary):
            stack.append(n.left)
            stack.append(n.right)
        elif isinstance(n, FieldAccess):
            stack.append(n.base)
        elif isinstance(n, Index):
            stack.append(n.base)
            stack.append(n.index)
    return out


def expr_text(e: Expr) -> str:
    """Compact source-like rendering, used for edge labels and reports."""
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, (VarRef, FuncRef)):
        return e.name.split("::")[-1]
    if isinstance(e, Unary):
        return f"{e.op}{expr_text(e.operand)}"
    if isinstance(e, Binary):
        return f"{expr_text(e.left)} {e.op} {expr_text(e.right)}"
    if isinstance(e, FieldAccess):
        sep = "->" if e.arrow else "."
        return f"{expr_text(e.base)}{sep}{e.name}"
    if isinstance(e, Index):
        return f"{expr_text(e.base)}[{expr_text(e.index)}]"
    if isinstance(e, Malloc):
        return f"malloc({e.alloc_type})"
    return "?"
