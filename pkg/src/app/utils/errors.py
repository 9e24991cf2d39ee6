#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Error types shared by all dvbx modules

Each error maps to one CLI exit code (see EXIT_CODES).
"""


class ConfigError(ValueError):
    """Invalid or unknown configuration value"""


class DataFormatError(ValueError):
    """Malformed file content (bad magic, truncation, bad line)"""


class ShapeError(ValueError):
    """Dimension mismatch between inputs"""


class DegenerateInputError(ValueError):
    """Input cannot support the requested estimate"""


class UndefinedDERError(ValueError):
    """DER requested for a reference with no scored speech"""


class NumericError(ArithmeticError):
    """Non-finite values or numerically invalid matrices"""


EXIT_CODES = {
    ConfigError: 1,
    DataFormatError: 2,
    ShapeError: 2,
    DegenerateInputError: 2,
    UndefinedDERError: 2,
    FileNotFoundError: 2,
    NumericError: 3,
}


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the CLI exit code (1 usage, 2 data, 3 numeric)"""
    for error_type, code in EXIT_CODES.items():
        if isinstance(error, error_type):
            return code
    return 1
