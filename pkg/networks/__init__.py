"""Declarative R2D, R(2+1)D and correlation network construction."""
