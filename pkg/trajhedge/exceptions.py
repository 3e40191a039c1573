#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
:App:       trajhedge
:Purpose:   Exception classes raised across the project.

            Each exception carries enough context (a row index or a
            dotted configuration key) for the CLI to report the failure
            precisely, and to map it onto an exit code.

:Platform:  Linux/Windows | Python 3.9+
:Developer: The trajhedge developers

"""


class TrajHedgeError(Exception):
    """Base class for all project-specific exceptions."""


class ChartError(TrajHedgeError, ValueError):
    """Raised when a price chart fails validation.

    Args:
        msg (str): Description of the failure.
        row (int, optional): 0-based data row index, in file order, at which the
            failure was detected. Defaults to None.

    """

    def __init__(self, msg: str, row: int=None):
        self.row = row
        if row is not None:
            msg = f'{msg} at row {row}'
        super().__init__(msg)


class ConfigError(TrajHedgeError, ValueError):
    """Raised when the run configuration is invalid.

    Args:
        key (str): Dotted path of the offending key (e.g. ``model.deltaB``).
        msg (str): Description of the failure.

    """

    def __init__(self, key: str, msg: str):
        self.key = key
        super().__init__(f'{key}: {msg}')


class DegenerateError(TrajHedgeError):
    """Raised when a numerical degeneracy prevents further processing."""


class GraphError(TrajHedgeError):
    """Raised on trajectory graph misuse or malformed graph artifacts."""


class PayoffError(TrajHedgeError):
    """Raised when a payoff is undefined or non-finite on a terminal node."""
