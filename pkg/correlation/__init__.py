"""Learnable, dilated, groupwise correlation over video clips."""
