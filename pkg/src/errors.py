"""
errors.py

Exception hierarchy for GraspLab.

Geometric outcomes such as ray misses, seal failures or collisions are reported in
result objects; exceptions are reserved for invalid input.

Author: GraspLab Team
"""

from typing import Optional


class GraspLabError(Exception):
    """Base class for all GraspLab errors."""


class ValidationError(GraspLabError, ValueError):
    """A parameter or input violates a precondition."""


class ParseError(GraspLabError):
    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(f"{where}{message}")


class EmptyMesh(GraspLabError):
    pass


class NonFiniteVertex(GraspLabError):
    pass


class NotWatertight(GraspLabError):
    pass


class NonPositiveStiffness(ValidationError):
    pass


class NonPositiveMass(ValidationError):
    pass


class PlacementFailed(GraspLabError):
    pass


class EmptyRecordSet(ValidationError):
    pass


class SchemaError(ValidationError):
    """Invalid JSON document; `pointer` is the RFC 6901 location of the problem."""

    def __init__(self, message: str, pointer: str = ""):
        self.pointer = pointer or "/"
        super().__init__(f"{self.pointer}: {message}")


class RecordError(GraspLabError):
    """Malformed measurement row; `row` is 1-based, counting the header as row 1."""

    def __init__(self, message: str, row: int):
        self.row = row
        super().__init__(f"row {row}: {message}")
