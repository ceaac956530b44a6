"""Parser for the textual program format (`.irq` files).

Grammar sketch::

    program     := (global_decl | handler)*
    global_decl := "global" IDENT "=" INT ";"
    handler     := "handler" IDENT "priority" INT "{" stmt* "}"
    stmt        := IDENT "=" expr ";"
                 | "local" IDENT "=" expr ";"
                 | "assert" "(" cond ")" ";"
                 | "if" "(" cond_or_star ")" block ("else" block)?
                 | "while" "(" cond_or_star ")" block
                 | "havoc" IDENT ";"
                 | "skip" ";"
    cond        := expr REL expr          REL in { == != < <= > >= }
    expr        := affine arithmetic: +, -, unary -, constant * expr

`//` starts a comment running to end of line. Multiplication is restricted to
a constant literal times an expression so every expression stays affine.
Locals are declared with `local name = expr;`, exactly once per handler, and
before any use on every path.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ir import (
    Add,
    Assert,
    Assign,
    CMP_OPS,
    Cmp,
    Cond,
    Const,
    Expr,
    Handler,
    Havoc,
    If,
    Mul,
    NONDET,
    Program,
    Skip,
    Stmt,
    Sub,
    VarRef,
    While,
)

_KEYWORDS = {"global", "handler", "priority", "local", "assert", "if", "else", "while", "havoc", "skip"}

_PUNCT = ("==", "!=", "<=", ">=", "<", ">", "=", "+", "-", "*", "(", ")", "{", "}", ";")


class ParseError(Exception):
    """Syntax or well-formedness error, with a 1-based source position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class _Token:
    kind: str  # "ident" | "int" | "punct" | "kw" | "eof"
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if ch in " \t\r":
            i, col = i + 1, col + 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(_Token("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            tokens.append(_Token("kw" if word in _KEYWORDS else "ident", word, line, col))
            col += j - i
            i = j
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                tokens.append(_Token("punct", p, line, col))
                i += len(p)
                col += len(p)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], globals_: dict[str, int]):
        self.tokens = tokens
        self.pos = 0
        self.globals = globals_
        # Scope state for the handler currently being parsed.
        self.handler_locals: set[str] = set()
        self.assert_count = 0
        self.handler_name = ""

    # -- token plumbing ----------------------------------------------------

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def fail(self, message: str, tok: _Token | None = None) -> ParseError:
        tok = tok or self.peek()
        return ParseError(message, tok.line, tok.col)

    def expect(self, kind: str, text: str | None = None) -> _Token:
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            want = text if text is not None else kind
            raise self.fail(f"expected {want!r}, found {t.text!r}" if t.kind != "eof"
                            else f"expected {want!r}, found end of input")
        return self.next()

    def at_punct(self, text: str) -> bool:
        t = self.peek()
        return t.kind == "punct" and t.text == text

    def at_kw(self, text: str) -> bool:
        t = self.peek()
        return t.kind == "kw" and t.text == text

    # -- program structure -------------------------------------------------

    def program(self) -> Program:
        handlers: list[Handler] = []
        handler_names: set[str] = set()
        global_order: list[tuple[str, int]] = []
        seen_globals: set[str] = set()
        while self.peek().kind != "eof":
            if self.at_kw("global"):
                tok = self.next()
                name = self.expect("ident")
                self.expect("punct", "=")
                init = self.int_literal()
                self.expect("punct", ";")
                if name.text in seen_globals:
                    raise self.fail(f"duplicate global '{name.text}'", name)
                seen_globals.add(name.text)
                global_order.append((name.text, init))
            elif self.at_kw("handler"):
                h = self.handler_decl()
                if h.name in handler_names:
                    raise self.fail(f"duplicate handler '{h.name}'")
                handler_names.add(h.name)
                handlers.append(h)
            else:
                raise self.fail("expected 'global' or 'handler' declaration")
        if not handlers:
            last = self.tokens[-1]
            raise ParseError("program declares no handlers", last.line, last.col)
        return Program(globals=tuple(global_order), handlers=tuple(handlers))

    def int_literal(self) -> int:
        neg = False
        if self.at_punct("-"):
            self.next()
            neg = True
        tok = self.expect("int")
        value = int(tok.text)
        return -value if neg else value

    def handler_decl(self) -> Handler:
        self.expect("kw", "handler")
        name = self.expect("ident")
        self.expect("kw", "priority")
        pr_tok = self.peek()
        priority = self.int_literal()
        if priority < 0:
            raise self.fail("priority must be non-negative", pr_tok)
        self.handler_locals = set()
        self.assert_count = 0
        self.handler_name = name.text
        body = self.block(declared=set())
        return Handler(name=name.text, priority=priority, body=body)

    def block(self, declared: set[str]) -> tuple[Stmt, ...]:
        """Parse `{ stmt* }`; `declared` is the definitely-assigned local set."""
        self.expect("punct", "{")
        stmts: list[Stmt] = []
        while not self.at_punct("}"):
            stmts.append(self.statement(declared))
        self.expect("punct", "}")
        return tuple(stmts)

    # -- statements ----------------------------------------------------------

    def statement(self, declared: set[str]) -> Stmt:
        t = self.peek()
        if t.kind == "kw":
            if t.text == "skip":
                self.next()
                self.expect("punct", ";")
                return Skip()
            if t.text == "havoc":
                self.next()
                name = self.expect("ident")
                self.expect("punct", ";")
                return Havoc(self.var_ref(name, declared))
            if t.text == "assert":
                self.next()
                self.expect("punct", "(")
                cond = self.comparison(declared)
                self.expect("punct", ")")
                self.expect("punct", ";")
                uid = f"{self.handler_name}#{self.assert_count}"
                self.assert_count += 1
                return Assert(cond, uid)
            if t.text == "local":
                self.next()
                name = self.expect("ident")
                if name.text in self.globals:
                    raise self.fail(f"local '{name.text}' shadows a global", name)
                if name.text in self.handler_locals:
                    raise self.fail(f"duplicate local '{name.text}'", name)
                self.expect("punct", "=")
                expr = self.expression(declared)
                self.expect("punct", ";")
                self.handler_locals.add(name.text)
                declared.add(name.text)
                return Assign(VarRef(name.text, "local"), expr)
            if t.text == "if":
                self.next()
                self.expect("punct", "(")
                cond = self.cond_or_star(declared)
                self.expect("punct", ")")
                then = self.block(set(declared))
                orelse: tuple[Stmt, ...] = ()
                if self.at_kw("else"):
                    self.next()
                    orelse = self.block(set(declared))
                return If(cond, then, orelse)
            if t.text == "while":
                self.next()
                self.expect("punct", "(")
                cond = self.cond_or_star(declared)
                self.expect("punct", ")")
                body = self.block(set(declared))
                return While(cond, body)
            raise self.fail(f"unexpected keyword '{t.text}'")
        if t.kind == "ident":
            name = self.next()
            self.expect("punct", "=")
            expr = self.expression(declared)
            self.expect("punct", ";")
            target = self.var_ref(name, declared, is_read=False)
            if not target.is_global and target.name not in declared:
                raise self.fail(f"local '{target.name}' assigned before declaration", name)
            return Assign(target, expr)
        raise self.fail(f"expected a statement, found {t.text!r}")

    def var_ref(self, tok: _Token, declared: set[str], *, is_read: bool = True) -> VarRef:
        if tok.text in self.globals:
            return VarRef(tok.text, "global")
        if tok.text in self.handler_locals:
            if is_read and tok.text not in declared:
                raise self.fail(f"local '{tok.text}' may be uninitialized here", tok)
            return VarRef(tok.text, "local")
        raise self.fail(f"undeclared variable '{tok.text}'", tok)

    # -- conditions and expressions -------------------------------------------

    def cond_or_star(self, declared: set[str]) -> Cond:
        if self.at_punct("*"):
            self.next()
            return NONDET
        return self.comparison(declared)

    def comparison(self, declared: set[str]) -> Cmp:
        left = self.expression(declared)
        t = self.peek()
        if t.kind != "punct" or t.text not in CMP_OPS:
            raise self.fail("expected a comparison operator")
        self.next()
        right = self.expression(declared)
        return Cmp(t.text, left, right)  # type: ignore[arg-type]

    def expression(self, declared: set[str]) -> Expr:
        e = self.term(declared)
        while self.at_punct("+") or self.at_punct("-"):
            op = self.next().text
            rhs = self.term(declared)
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self, declared: set[str]) -> Expr:
        e = self.factor(declared)
        while self.at_punct("*"):
            star = self.next()
            rhs = self.factor(declared)
            if isinstance(e, Const):
                e = Mul(e.value, rhs)
            elif isinstance(rhs, Const):
                e = Mul(rhs.value, e)
            else:
                raise self.fail("non-affine expression: one multiplication operand must be a constant", star)
        return e

    def factor(self, declared: set[str]) -> Expr:
        t = self.peek()
        if t.kind == "punct" and t.text == "-":
            self.next()
            inner = self.factor(declared)
            if isinstance(inner, Const):
                return Const(-inner.value)
            return Mul(-1, inner)
        if t.kind == "int":
            self.next()
            return Const(int(t.text))
        if t.kind == "ident":
            self.next()
            return self.var_ref(t, declared)
        if t.kind == "punct" and t.text == "(":
            self.next()
            e = self.expression(declared)
            self.expect("punct", ")")
            return e
        raise self.fail(f"expected an expression, found {t.text!r}" if t.kind != "eof"
                        else "expected an expression, found end of input")


def _collect_globals(tokens: list[_Token]) -> dict[str, int]:
    """Pre-scan for top-level `global` declarations so handlers may precede them."""
    out: dict[str, int] = {}
    depth = 0
    i = 0
    while tokens[i].kind != "eof":
        t = tokens[i]
        if t.kind == "punct" and t.text == "{":
            depth += 1
        elif t.kind == "punct" and t.text == "}":
            depth = max(0, depth - 1)
        elif depth == 0 and t.kind == "kw" and t.text == "global":
            if tokens[i + 1].kind == "ident":
                name = tokens[i + 1].text
                if name not in out:
                    out[name] = 0  # real value filled in by the main pass
        i += 1
    return out


def parse_program(text: str) -> Program:
    """Parse source text into a well-formed program.

    Raises ParseError (with line and column) on syntax errors, duplicate
    names, undeclared variables, or non-affine expressions. The result always
    passes `validate` with no diagnostics.
    """
    tokens = _tokenize(text)
    globals_ = _collect_globals(tokens)
    return _Parser(tokens, globals_).program()


def parse_file(path: str) -> Program:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_program(fh.read())
