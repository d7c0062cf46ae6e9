"""Exception hierarchy shared across the package."""


class GasNomValError(Exception):
    """Base class for all errors raised by this package."""


class UnitError(GasNomValError):
    """Unknown or unsupported unit string."""


class GasLibParseError(GasNomValError):
    """Malformed or inconsistent GasLib input (XML, ids, references)."""


class DataError(GasNomValError):
    """Physically or structurally invalid network data."""


class ScenarioError(GasNomValError):
    """Nomination data that cannot be turned into a usable scenario."""


class BuildError(GasNomValError):
    """Invalid model-building request (formulation/option mismatch)."""


class ExportError(GasNomValError):
    """Serialization of an incomplete or inconsistent model."""


class SolutionError(GasNomValError):
    """Solution file that does not match the model it claims to solve."""
