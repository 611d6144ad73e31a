# This file makes the nvhp directory a Python package

__version__ = "0.3.0"
