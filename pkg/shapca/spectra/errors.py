"""
Spectra error types
"""
from typing import Optional


class SpectraParseError(ValueError):
    """CSV parse failure; carries the 1-based file row and 0-based column when known"""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[int] = None):
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column}")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")
        self.row = row
        self.column = column


class RaggedRowError(SpectraParseError):
    pass


class NonMonotoneAxisError(SpectraParseError):
    pass


class NonNumericCellError(SpectraParseError):
    pass


class UnknownLabelColumnError(SpectraParseError):
    pass


class SplitError(ValueError):
    """Infeasible split or fold request"""


class PreprocessError(ValueError):
    """Invalid signal or preprocessing parameters"""
