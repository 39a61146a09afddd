"""Symbolic and numerical tools for Rockland operators on graded Lie groups."""
