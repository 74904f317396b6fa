__author__ = "chiraldyn developers"
__year__ = "2026"

"""
chiraldyn: Gaussian-state simulation of chirality-induced quantum nonreciprocity in two optical
channels coupled through a shared atomic spin.
"""

__version__ = "0.1.0"
