"""
Integration tests for the video correlation toolkit.

These run whole pipelines: dataset generation, training with checkpoint
resume, evaluation, gradient checks of complete networks, the management
commands and the experiment suites.
"""
