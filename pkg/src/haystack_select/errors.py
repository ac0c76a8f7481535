"""Exception hierarchy shared across the package.

Every domain failure raises a subclass of :class:`HaystackSelectError` so the
CLI can map any component error to a machine-readable payload with a stable
``type`` name.
"""

from __future__ import annotations


class HaystackSelectError(Exception):
    """Base class for all errors raised by this package."""


class EmbeddingFormatError(HaystackSelectError):
    """Malformed embedding file (bad magic, version, or truncated payload)."""

    def __init__(self, message: str, *, path: str | None = None, offset: int | None = None):
        detail = message
        if path is not None:
            detail += f" [file: {path}]"
        if offset is not None:
            detail += f" [offset: {offset}]"
        super().__init__(detail)
        self.path = path
        self.offset = offset


class ManifestError(HaystackSelectError):
    """Manifest is unparseable or inconsistent with its embedding file."""


class DuplicateIdError(ManifestError):
    """Two manifest entries carry the same id."""

    def __init__(self, item_id: str, first_index: int, second_index: int):
        super().__init__(
            f"duplicate id {item_id!r} at manifest entries {first_index} and {second_index}"
        )
        self.item_id = item_id


class NonFiniteValueError(HaystackSelectError):
    """NaN or Inf encountered in embedding data."""


class ZeroNormRowError(HaystackSelectError):
    """A row with zero Euclidean norm cannot be normalized."""

    def __init__(self, row_index: int, row_id: str):
        super().__init__(f"row {row_index} (id {row_id!r}) has zero norm")
        self.row_index = row_index
        self.row_id = row_id


class UnknownClassError(HaystackSelectError):
    """Requested class label is absent from the reference store."""

    def __init__(self, class_label: str, available: list[str]):
        shown = ", ".join(sorted(available))
        super().__init__(f"unknown class {class_label!r}; available classes: {shown}")
        self.class_label = class_label
        self.available = sorted(available)


class DimensionMismatchError(HaystackSelectError):
    """Operands disagree on feature dimension or expected element count."""


class QueryParseError(HaystackSelectError):
    """Query text does not match the supported template."""


class ConfigurationError(HaystackSelectError):
    """Invalid or inconsistent configuration of objectives, kernels, or runs."""


class NumericalError(HaystackSelectError):
    """A numerical routine failed beyond recoverable conditioning."""
