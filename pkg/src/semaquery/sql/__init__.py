from .ast import SelectStmt, Statement
from .parser import parse, parse_options, parse_script
from .printer import print_statement
from .prompt import PromptTemplate, parse_prompt
from .tokens import Token, tokenize

__all__ = [
    "PromptTemplate",
    "SelectStmt",
    "Statement",
    "Token",
    "parse",
    "parse_options",
    "parse_prompt",
    "parse_script",
    "print_statement",
    "tokenize",
]
