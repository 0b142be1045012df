"""Desk-scale verification lab for gap persistence of weakly interacting lattice fermions."""

__version__ = "0.1.0"
