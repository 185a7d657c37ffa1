"""HALD: hybrid automatic cephalometric landmark detection.

Three mechanisms cover the landmark catalogue: edge tracing for the chin
points, weighted template matching for landmarks embedded in a
recognizable structure, and direct estimation of the clinical lines
whose inclinations the analyses actually consume.
"""

__version__ = "0.1.0"
