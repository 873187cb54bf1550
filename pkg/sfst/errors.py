"""Exceptions raised by sfst.

Classes defined here:
    SfstError
    AutomatonFormatError
    SymbolTableError
    EmptyLanguageError
    BackoffError
    CoverageError
    ConvergenceError
    CyclicMachineError
    SampleTruncatedError
    NegativeCountError
    DCInvariantError
    UsageError
"""


class SfstError(Exception):
    """Base class for data errors raised by sfst operations."""


class AutomatonFormatError(SfstError, ValueError):
    """Malformed or structurally invalid automaton text.

    Args:
        message: Description of the problem.
        line: 1-based line number in the input, if known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = "line %i: %s" % (line, message)
        super().__init__(message)


class SymbolTableError(SfstError, ValueError):
    """Invalid symbol table, unknown symbol or mismatched tables."""


class EmptyLanguageError(SfstError):
    """An automaton has no accepting path."""

    def __init__(self, message="empty language"):
        super().__init__(message)


class BackoffError(SfstError):
    """A topology is not backoff-complete."""

    def __init__(self, violations):
        self.violations = list(violations)
        shown = ', '.join(repr(v) for v in self.violations[:5])
        super().__init__("topology is not backoff-complete: %s%s" % (
            shown, ' ...' if len(self.violations) > 5 else ''))


class CoverageError(SfstError):
    """Source mass falls outside the language of the target topology.

    Attributes:
        witness: A label sequence (prefix followed by the offending label)
            that the source generates and the target rejects.
    """

    def __init__(self, message, witness=None):
        self.witness = witness
        if witness is not None:
            message = "%s (witness: %s)" % (message, witness)
        super().__init__(message)


class ConvergenceError(SfstError):
    """Shortest distance failed to converge."""

    def __init__(self, residual, sweeps):
        self.residual = residual
        self.sweeps = sweeps
        super().__init__("no convergence after %i sweeps (residual %.3g)" %
                         (sweeps, residual))


class CyclicMachineError(SfstError):
    """An operation that requires an acyclic machine received a cyclic one."""


class SampleTruncatedError(SfstError):
    """A sample reached max_len without emitting the terminator."""


class NegativeCountError(SfstError, ValueError):
    """Counts are negative beyond tolerance."""


class DCInvariantError(SfstError, AssertionError):
    """Internal invariant of the KL minimization broken."""


class UsageError(Exception):
    """Command-line usage problem (exit code 1)."""
