"""Figure rendering for pdtrunc sweep output."""

from .render import SchemaError, load_series, render

__version__ = "0.1.0"
