"""JSON documents: problem instances and sweep specs."""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema

from .model import InvalidInputError, Problem

_number = {"type": "number", "minimum": 0}
_vector = {"type": "array", "items": _number}

PROBLEM_SCHEMA = {
    "type": "object",
    "required": ["H", "k", "capability_costs", "robots", "tasks", "cost_model"],
    "properties": {
        "H": {"type": "integer", "minimum": 1},
        "k": {"type": "integer", "minimum": 1},
        "capability_costs": _vector,
        "robots": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "capabilities"],
                "properties": {"id": {"type": "integer", "minimum": 0}, "capabilities": _vector},
            },
        },
        "tasks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "reward", "configurations"],
                "properties": {
                    "id": {"type": "integer", "minimum": 0},
                    "reward": {"type": "number", "exclusiveMinimum": 0},
                    "configurations": {"type": "array", "minItems": 1, "items": _vector},
                },
            },
        },
        "cost_model": {
            "oneOf": [
                {
                    "type": "object",
                    "required": ["kind", "coefficient"],
                    "properties": {"kind": {"const": "linear"}, "coefficient": _number},
                },
                {"type": "object", "required": ["kind"], "properties": {"kind": {"const": "zero"}}},
                {
                    "type": "object",
                    "required": ["kind", "entries"],
                    "properties": {
                        "kind": {"const": "table"},
                        "entries": {
                            "type": "array",
                            "items": {
                                "type": "array",
                                "prefixItems": [
                                    {"type": "integer", "minimum": 1},
                                    {"type": "integer", "minimum": 0},
                                    _number,
                                ],
                                "minItems": 3,
                                "maxItems": 3,
                            },
                        },
                        "default": _number,
                    },
                },
            ]
        },
    },
}


class SchemaError(InvalidInputError):
    """Document failed validation; ``pointer`` locates the offending value."""

    def __init__(self, message: str, pointer: str):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


def _pointer(path) -> str:
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in path)


def problem_from_json(data: dict) -> Problem:
    validator = jsonschema.Draft202012Validator(PROBLEM_SCHEMA)
    error = jsonschema.exceptions.best_match(validator.iter_errors(data))
    if error is not None:
        raise SchemaError(error.message, _pointer(error.absolute_path))
    return Problem.from_json(data)


def load_problem(path: str | Path) -> Problem:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON ({exc.msg} at line {exc.lineno})", "") from exc
    return problem_from_json(data)


def dump_problem(problem: Problem) -> str:
    return json.dumps(problem.to_json(), indent=2)
