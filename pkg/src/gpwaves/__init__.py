"""Numerical laboratory for Gross-Pitaevskii travelling waves."""

__version__ = "0.1.0"
