"""Differentiable building blocks for the video networks."""
