"""Recursive-descent parser for the extended SQL dialect.

Supports standard SELECT plus LLM/PREDICT clauses in any expression or
FROM position, CREATE [LLM|TABULAR|EMBED] MODEL, CREATE TABLE AS, SET,
DROP MODEL, ALTER TABLE ADD KEY, and EXPLAIN variants.
"""

from __future__ import annotations

from ..errors import ParseError
from ..values import ValueType
from .ast import (
    AlterTableKeyStmt,
    CreateModelStmt,
    CreateTableAsStmt,
    DerivedTable,
    DropModelStmt,
    EArith,
    EColumn,
    ECompare,
    EFunc,
    EIsNull,
    ELiteral,
    ELogical,
    ENeg,
    ENot,
    EStar,
    ExplainStmt,
    ExprNode,
    FromItem,
    JoinItem,
    OrderItem,
    PredictExprNode,
    PredictFrom,
    SelectItem,
    SelectStmt,
    SetStmt,
    Statement,
    TableRef,
)
from .prompt import parse_prompt
from .tokens import Token, tokenize

_TYPE_WORDS = {
    "VARCHAR": ValueType.VARCHAR,
    "INTEGER": ValueType.INTEGER,
    "DOUBLE": ValueType.DOUBLE,
    "DATETIME": ValueType.DATETIME,
    "BOOLEAN": ValueType.BOOLEAN,
    "BOOL": ValueType.BOOLEAN,
}

_AGGREGATE_FUNCS = {"count", "sum", "avg", "min", "max"}


class Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # --- token plumbing ---

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def at_keyword(self, *keywords: str) -> bool:
        tok = self.peek()
        return tok.kind == "KEYWORD" and tok.text in keywords

    def at_op(self, *ops: str) -> bool:
        tok = self.peek()
        return tok.kind == "OP" and tok.text in ops

    def accept_keyword(self, *keywords: str) -> Token | None:
        if self.at_keyword(*keywords):
            return self.next()
        return None

    def accept_op(self, *ops: str) -> Token | None:
        if self.at_op(*ops):
            return self.next()
        return None

    def expect_keyword(self, keyword: str) -> Token:
        tok = self.peek()
        if not tok.matches(keyword):
            raise ParseError(f"expected {keyword}, found {tok.text or 'end of input'!r}",
                             tok.line, tok.column)
        return self.next()

    def expect_op(self, op: str) -> Token:
        tok = self.peek()
        if tok.kind != "OP" or tok.text != op:
            raise ParseError(f"expected {op!r}, found {tok.text or 'end of input'!r}",
                             tok.line, tok.column)
        return self.next()

    def expect_ident(self, what: str = "identifier") -> Token:
        tok = self.peek()
        if tok.kind in ("IDENT", "QIDENT"):
            return self.next()
        # model/table names may collide with soft keywords such as OUTPUT
        # (ORDER covers table names like Order; aliases always follow AS,
        # so ORDER BY stays unambiguous)
        if tok.kind == "KEYWORD" and tok.text in ("OUTPUT", "KEY", "PATH",
                                                  "API", "MODEL", "ORDER"):
            tok = self.next()
            return Token("IDENT", str(tok.value), tok.line, tok.column)
        raise ParseError(f"expected {what}, found {tok.text or 'end of input'!r}",
                         tok.line, tok.column)

    def expect_string(self, what: str = "string literal") -> Token:
        tok = self.peek()
        if tok.kind != "STRING":
            raise ParseError(f"expected {what}, found {tok.text or 'end of input'!r}",
                             tok.line, tok.column)
        return self.next()

    # --- statements ---

    def parse_script(self) -> list[Statement]:
        stmts = []
        while not self.peek().kind == "EOF":
            if self.accept_op(";"):
                continue
            stmts.append(self.parse_statement())
            if self.peek().kind != "EOF":
                self.expect_op(";")
        return stmts

    def parse_statement(self) -> Statement:
        tok = self.peek()
        if tok.matches("EXPLAIN"):
            return self.parse_explain()
        if tok.matches("SELECT"):
            return self.parse_select()
        if tok.matches("CREATE"):
            return self.parse_create()
        if tok.matches("DROP"):
            return self.parse_drop()
        if tok.matches("SET"):
            return self.parse_set()
        if tok.matches("ALTER"):
            return self.parse_alter()
        raise ParseError(f"expected statement, found {tok.text or 'end of input'!r}",
                         tok.line, tok.column)

    def parse_explain(self) -> ExplainStmt:
        self.expect_keyword("EXPLAIN")
        mode = "logical"
        if self.accept_keyword("OPTIMIZED"):
            mode = "optimized"
        elif self.accept_keyword("ANALYZE"):
            mode = "analyze"
        return ExplainStmt(self.parse_statement(), mode)

    def parse_select(self) -> SelectStmt:
        self.expect_keyword("SELECT")
        items = [self.parse_select_item()]
        while self.accept_op(","):
            items.append(self.parse_select_item())

        from_item = None
        if self.accept_keyword("FROM"):
            from_item = self.parse_from()

        where = None
        if self.accept_keyword("WHERE"):
            where = self.parse_expression()

        group_by: list[ExprNode] = []
        if self.accept_keyword("GROUP"):
            self.expect_keyword("BY")
            group_by.append(self.parse_expression())
            while self.accept_op(","):
                group_by.append(self.parse_expression())

        order_by: list[OrderItem] = []
        if self.accept_keyword("ORDER"):
            self.expect_keyword("BY")
            order_by.append(self.parse_order_item())
            while self.accept_op(","):
                order_by.append(self.parse_order_item())

        limit = None
        if self.accept_keyword("LIMIT"):
            tok = self.peek()
            if tok.kind != "INT":
                raise ParseError(f"expected integer after LIMIT, found {tok.text!r}",
                                 tok.line, tok.column)
            limit = self.next().value

        return SelectStmt(tuple(items), from_item, where, tuple(group_by),
                          tuple(order_by), limit)

    def parse_select_item(self) -> SelectItem:
        if self.at_op("*"):
            self.next()
            return SelectItem(EStar())
        # qualified star: ident.*
        if (self.peek().kind in ("IDENT", "QIDENT") and self.peek(1).kind == "OP"
                and self.peek(1).text == "." and self.peek(2).kind == "OP"
                and self.peek(2).text == "*"):
            qualifier = self.next().text
            self.next()
            self.next()
            return SelectItem(EStar(qualifier))
        expr = self.parse_expression(allow_agg=True)
        alias = None
        if self.accept_keyword("AS"):
            alias = self.expect_ident("alias").text
        elif self.peek().kind == "IDENT":
            alias = self.next().text
        return SelectItem(expr, alias)

    def parse_order_item(self) -> OrderItem:
        expr = self.parse_expression()
        ascending = True
        if self.accept_keyword("DESC"):
            ascending = False
        else:
            self.accept_keyword("ASC")
        return OrderItem(expr, ascending)

    # --- FROM clause ---

    def parse_from(self) -> FromItem:
        item = self.parse_from_primary()
        while True:
            if self.accept_op(","):
                item = JoinItem(item, self.parse_from_primary(), "cross")
            elif self.at_keyword("JOIN", "INNER", "NATURAL", "CROSS"):
                kind = "inner"
                if self.accept_keyword("NATURAL"):
                    kind = "natural"
                elif self.accept_keyword("CROSS"):
                    kind = "cross"
                else:
                    self.accept_keyword("INNER")
                self.expect_keyword("JOIN")
                right = self.parse_from_primary()
                condition = None
                if kind == "inner":
                    if self.accept_keyword("ON"):
                        condition = self.parse_expression()
                    else:
                        kind = "cross"
                item = JoinItem(item, right, kind, condition)
            else:
                return item

    def parse_from_primary(self) -> FromItem:
        if self.at_keyword("LLM", "PREDICT"):
            node = self.parse_predict_clause(from_position=True)
            alias = None
            if self.accept_keyword("AS"):
                alias = self.expect_ident("alias").text
            elif self.peek().kind == "IDENT":
                alias = self.next().text
            if alias:
                node = PredictExprNode(node.model_name, node.source, node.prompt,
                                       node.agg, alias, node.features, node.is_tabular)
            return PredictFrom(node)
        if self.accept_op("("):
            select = self.parse_select()
            self.expect_op(")")
            self.expect_keyword("AS")
            alias = self.expect_ident("alias").text
            return DerivedTable(select, alias)
        name = self.expect_ident("table name").text
        alias = None
        if self.accept_keyword("AS"):
            alias = self.expect_ident("alias").text
        elif self.peek().kind == "IDENT":
            alias = self.next().text
        return TableRef(name, alias)

    def parse_predict_clause(self, from_position: bool, allow_agg: bool = False) -> PredictExprNode:
        if self.accept_keyword("PREDICT"):
            model = self.expect_ident("model name").text
            self.expect_op("(")
            if from_position:
                source = self.expect_ident("table name").text
                self.expect_op(")")
                return PredictExprNode(model, source=source, is_tabular=True)
            features = [self.parse_column_ref()]
            while self.accept_op(","):
                features.append(self.parse_column_ref())
            self.expect_op(")")
            return PredictExprNode(model, features=tuple(features), is_tabular=True)

        self.expect_keyword("LLM")
        agg = bool(self.accept_keyword("AGG"))
        if agg and not allow_agg:
            tok = self.peek()
            raise ParseError("LLM AGG is only legal in the projection of a grouped query",
                             tok.line, tok.column)
        model = self.expect_ident("model name").text
        self.expect_op("(")
        self.expect_keyword("PROMPT")
        raw = self.expect_string("prompt string").value
        template = parse_prompt(raw)
        source = None
        if self.accept_op(","):
            source = self.expect_ident("table name").text
            if not from_position:
                tok = self.peek()
                raise ParseError("LLM clause with an input relation is only legal in FROM",
                                 tok.line, tok.column)
        self.expect_op(")")
        return PredictExprNode(model, source=source, prompt=template, agg=agg)

    def parse_column_ref(self) -> EColumn:
        first = self.expect_ident("column name")
        if self.at_op(".") and self.peek(1).kind in ("IDENT", "QIDENT"):
            self.next()
            second = self.next()
            return EColumn(first.text, second.text, quoted=second.kind == "QIDENT")
        return EColumn(None, first.text, quoted=first.kind == "QIDENT")

    # --- expressions ---

    def parse_expression(self, allow_agg: bool = False) -> ExprNode:
        return self.parse_or(allow_agg)

    def parse_or(self, allow_agg: bool) -> ExprNode:
        items = [self.parse_and(allow_agg)]
        while self.accept_keyword("OR"):
            items.append(self.parse_and(allow_agg))
        return items[0] if len(items) == 1 else ELogical("OR", tuple(items))

    def parse_and(self, allow_agg: bool) -> ExprNode:
        items = [self.parse_not(allow_agg)]
        while self.accept_keyword("AND"):
            items.append(self.parse_not(allow_agg))
        return items[0] if len(items) == 1 else ELogical("AND", tuple(items))

    def parse_not(self, allow_agg: bool) -> ExprNode:
        if self.accept_keyword("NOT"):
            return ENot(self.parse_not(allow_agg))
        return self.parse_comparison(allow_agg)

    def parse_comparison(self, allow_agg: bool) -> ExprNode:
        left = self.parse_additive(allow_agg)
        if self.accept_keyword("IS"):
            negated = bool(self.accept_keyword("NOT"))
            self.expect_keyword("NULL")
            return EIsNull(left, negated)
        if self.at_op("=", "<>", "<", "<=", ">", ">="):
            op = self.next().text
            right = self.parse_additive(allow_agg)
            return ECompare(op, left, right)
        return left

    def parse_additive(self, allow_agg: bool) -> ExprNode:
        left = self.parse_multiplicative(allow_agg)
        while self.at_op("+", "-"):
            op = self.next().text
            left = EArith(op, left, self.parse_multiplicative(allow_agg))
        return left

    def parse_multiplicative(self, allow_agg: bool) -> ExprNode:
        left = self.parse_unary(allow_agg)
        while self.at_op("*", "/"):
            op = self.next().text
            left = EArith(op, left, self.parse_unary(allow_agg))
        return left

    def parse_unary(self, allow_agg: bool) -> ExprNode:
        if self.accept_op("-"):
            return ENeg(self.parse_unary(allow_agg))
        return self.parse_primary(allow_agg)

    def parse_primary(self, allow_agg: bool) -> ExprNode:
        tok = self.peek()
        if tok.kind == "INT":
            self.next()
            return ELiteral(tok.value, ValueType.INTEGER)
        if tok.kind == "FLOAT":
            self.next()
            return ELiteral(tok.value, ValueType.DOUBLE)
        if tok.kind == "STRING":
            self.next()
            return ELiteral(tok.value, ValueType.VARCHAR)
        if tok.matches("TRUE"):
            self.next()
            return ELiteral(True, ValueType.BOOLEAN)
        if tok.matches("FALSE"):
            self.next()
            return ELiteral(False, ValueType.BOOLEAN)
        if tok.matches("NULL"):
            self.next()
            return ELiteral(None, None)
        if tok.matches("LLM") or tok.matches("PREDICT"):
            return self.parse_predict_clause(from_position=False, allow_agg=allow_agg)
        if self.accept_op("("):
            expr = self.parse_expression(allow_agg)
            self.expect_op(")")
            return expr
        if tok.kind in ("IDENT", "QIDENT"):
            # function call
            if (tok.kind == "IDENT" and self.peek(1).kind == "OP"
                    and self.peek(1).text == "("):
                name = self.next().text
                self.next()
                if self.accept_op("*"):
                    self.expect_op(")")
                    return EFunc(name.lower(), (), star=True)
                args: list[ExprNode] = []
                if not self.at_op(")"):
                    args.append(self.parse_expression(allow_agg))
                    while self.accept_op(","):
                        args.append(self.parse_expression(allow_agg))
                self.expect_op(")")
                if name.lower() not in _AGGREGATE_FUNCS:
                    raise ParseError(f"unknown function {name!r}", tok.line, tok.column)
                return EFunc(name.lower(), tuple(args))
            return self.parse_column_ref()
        raise ParseError(f"expected expression, found {tok.text or 'end of input'!r}",
                         tok.line, tok.column)

    # --- DDL ---

    def parse_create(self) -> Statement:
        self.expect_keyword("CREATE")
        if self.accept_keyword("TABLE"):
            name = self.expect_ident("table name").text
            self.expect_keyword("AS")
            select = self.parse_select()
            return CreateTableAsStmt(name, select)
        kind_tok = self.peek()
        if not self.at_keyword("LLM", "TABULAR", "EMBED"):
            raise ParseError(
                f"expected TABLE, LLM, TABULAR, or EMBED, found {kind_tok.text!r}",
                kind_tok.line, kind_tok.column)
        kind = self.next().text
        self.expect_keyword("MODEL")
        name = self.expect_ident("model name").text
        self.expect_keyword("PATH")
        path = self.expect_string("model path").value

        on_prompt = False
        api = None
        table = None
        features: tuple[str, ...] = ()
        output_columns: tuple[tuple[str, ValueType], ...] = ()
        secret = None
        options: tuple[tuple[str, object], ...] = ()

        while True:
            if self.accept_keyword("ON"):
                if self.accept_keyword("PROMPT"):
                    on_prompt = True
                elif self.accept_keyword("TABLE"):
                    table = self.expect_ident("table name").text
                else:
                    tok = self.peek()
                    raise ParseError(f"expected PROMPT or TABLE after ON, found {tok.text!r}",
                                     tok.line, tok.column)
            elif self.accept_keyword("API"):
                api = self.expect_string("API URL").value
            elif self.accept_keyword("FEATURES"):
                features = tuple(self.parse_name_list())
            elif self.accept_keyword("OUTPUT"):
                output_columns = tuple(self.parse_typed_column_list())
            elif self.accept_keyword("SECRET"):
                secret = self.expect_ident("secret name").text
            elif self.accept_keyword("OPTIONS"):
                options = tuple(self.parse_options_object().items())
            else:
                break
        return CreateModelStmt(name, kind, path, on_prompt, api, table,
                               features, output_columns, secret, options)

    def parse_name_list(self) -> list[str]:
        self.expect_op("(")
        names = [self.expect_ident("column name").text]
        while self.accept_op(","):
            names.append(self.expect_ident("column name").text)
        self.expect_op(")")
        return names

    def parse_typed_column_list(self) -> list[tuple[str, ValueType]]:
        self.expect_op("(")
        cols = [self.parse_typed_column()]
        while self.accept_op(","):
            cols.append(self.parse_typed_column())
        self.expect_op(")")
        return cols

    def parse_typed_column(self) -> tuple[str, ValueType]:
        name = self.expect_ident("column name").text
        tok = self.expect_ident("type name")
        vtype = _TYPE_WORDS.get(tok.text.upper())
        if vtype is None:
            raise ParseError(f"unknown type {tok.text!r}", tok.line, tok.column)
        return name, vtype

    def parse_options_object(self) -> dict[str, object]:
        """OPTIONS object: brace-enclosed quoted-key : literal pairs."""
        self.expect_op("{")
        options: dict[str, object] = {}
        while not self.at_op("}"):
            key_tok = self.expect_string("option key")
            key = key_tok.value
            if key in options:
                raise ParseError(f"duplicate option key {key!r}",
                                 key_tok.line, key_tok.column)
            self.expect_op(":")
            options[key] = self.parse_option_literal()
            if not self.accept_op(","):
                break
        self.expect_op("}")
        return options

    def parse_option_literal(self) -> object:
        tok = self.peek()
        if tok.kind in ("INT", "FLOAT", "STRING"):
            self.next()
            return tok.value
        if tok.matches("TRUE"):
            self.next()
            return True
        if tok.matches("FALSE"):
            self.next()
            return False
        if self.accept_op("-"):
            inner = self.peek()
            if inner.kind in ("INT", "FLOAT"):
                self.next()
                return -inner.value
            raise ParseError(f"malformed option value near {inner.text!r}",
                             inner.line, inner.column)
        raise ParseError(f"malformed option value near {tok.text!r}",
                         tok.line, tok.column)

    def parse_drop(self) -> DropModelStmt:
        self.expect_keyword("DROP")
        self.expect_keyword("MODEL")
        return DropModelStmt(self.expect_ident("model name").text)

    def parse_set(self) -> SetStmt:
        self.expect_keyword("SET")
        key = self.expect_ident("setting name").text
        self.expect_op("=")
        value = self.parse_option_literal()
        return SetStmt(key, value)

    def parse_alter(self) -> AlterTableKeyStmt:
        self.expect_keyword("ALTER")
        self.expect_keyword("TABLE")
        table = self.expect_ident("table name").text
        self.expect_keyword("ADD")
        if self.accept_keyword("PRIMARY"):
            self.expect_keyword("KEY")
            return AlterTableKeyStmt(table, "primary", tuple(self.parse_name_list()))
        self.expect_keyword("FOREIGN")
        self.expect_keyword("KEY")
        columns = tuple(self.parse_name_list())
        self.expect_keyword("REFERENCES")
        ref_table = self.expect_ident("table name").text
        ref_columns = tuple(self.parse_name_list())
        return AlterTableKeyStmt(table, "foreign", columns, ref_table, ref_columns)


def parse(sql: str) -> Statement:
    """Parse exactly one statement (trailing ';' allowed)."""
    parser = Parser(tokenize(sql))
    stmt = parser.parse_statement()
    parser.accept_op(";")
    tok = parser.peek()
    if tok.kind != "EOF":
        raise ParseError(f"unexpected trailing input {tok.text!r}", tok.line, tok.column)
    return stmt


def parse_script(sql: str) -> list[Statement]:
    """Parse a ;-separated sequence of statements."""
    return Parser(tokenize(sql)).parse_script()


def parse_options(text: str) -> dict[str, object]:
    """Parse a standalone OPTIONS object such as "{ 'batch_size': 16 }"."""
    parser = Parser(tokenize(text))
    options = parser.parse_options_object()
    tok = parser.peek()
    if tok.kind != "EOF":
        raise ParseError(f"unexpected trailing input {tok.text!r}", tok.line, tok.column)
    return options
