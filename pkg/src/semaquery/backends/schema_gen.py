"""Structured-output artifacts derived from output placeholders.

build_json_schema produces the strict JSON-schema object attached to
chat-completions requests; build_bnf_grammar emits a BNF-style grammar
(recursion, no repetition operators) for engines that constrain
sampling with grammars. Only construction ships; no local decoder.
"""

from __future__ import annotations

from ..values import ValueType

_JSON_SCHEMA_TYPES = {
    ValueType.VARCHAR: {"type": "string"},
    ValueType.INTEGER: {"type": "integer"},
    ValueType.DOUBLE: {"type": "number"},
    ValueType.BOOLEAN: {"type": "boolean"},
    ValueType.DATETIME: {"type": "string", "format": "date-time"},
}


def build_json_schema(outputs: list[tuple[str, ValueType]]) -> dict:
    """Schema for an object root {"rows": [...]} of per-row records."""
    properties: dict[str, dict] = {"row_id": {"type": "integer"}}
    for name, vtype in outputs:
        properties[name] = dict(_JSON_SCHEMA_TYPES[vtype])
    record = {
        "type": "object",
        "properties": properties,
        "required": list(properties),
        "additionalProperties": False,
    }
    return {
        "type": "object",
        "properties": {"rows": {"type": "array", "items": record}},
        "required": ["rows"],
        "additionalProperties": False,
    }


_GRAMMAR_RULES = {
    "string": [
        'string ::= "\\"" characters "\\""',
        'characters ::= "" | character characters',
        'character ::= [^"\\\\] | "\\\\" escape',
        'escape ::= ["\\\\/bfnrt]',
    ],
    "integer": [
        'integer ::= digits | "-" digits',
        "digits ::= digit | digit digits",
        "digit ::= [0-9]",
    ],
    "number": [
        "number ::= integer | integer fraction | integer exponent "
        "| integer fraction exponent",
        'fraction ::= "." digits',
        'exponent ::= expmark digits | expmark "-" digits | expmark "+" digits',
        'expmark ::= "e" | "E"',
    ],
    "boolean": ['boolean ::= "true" | "false"'],
}

_GRAMMAR_TYPE = {
    ValueType.VARCHAR: "string",
    ValueType.INTEGER: "integer",
    ValueType.DOUBLE: "number",
    ValueType.BOOLEAN: "boolean",
    ValueType.DATETIME: "string",
}


def _quote_terminal(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def build_bnf_grammar(outputs: list[tuple[str, ValueType]]) -> str:
    """Grammar accepting exactly the keyed JSON arrays the prompts request.

    Records list row_id first, then each output field in declared order.
    """
    if not outputs:
        raise ValueError("grammar needs at least one output")
    lines = [
        'root ::= ws "[" ws "]" ws | ws "[" ws records ws "]" ws',
        'records ::= record | record ws "," ws records',
    ]
    field_rules = ["field-row-id"]
    field_rules.extend(f"field-{name}" for name, _ in outputs)
    record_body = ' ws "," ws '.join(field_rules)
    lines.append(f'record ::= "{{" ws {record_body} ws "}}"')
    lines.append(f'field-row-id ::= {_quote_terminal(chr(34) + "row_id" + chr(34))}'
                 " ws \":\" ws integer")

    used = {"integer"}
    for name, vtype in outputs:
        rule = _GRAMMAR_TYPE[vtype]
        used.add(rule)
        if rule == "number":
            used.add("integer")
        key = _quote_terminal('"' + name + '"')
        lines.append(f'field-{name} ::= {key} ws ":" ws {rule}')
    for rule in ("string", "integer", "number", "boolean"):
        if rule in used:
            lines.extend(_GRAMMAR_RULES[rule])
    lines.append('ws ::= "" | wschar ws')
    lines.append("wschar ::= [ \\t\\n\\r]")
    return "\n".join(lines)
