"""Recursive video reasoning over robot trajectories with ground-truth progress labels."""

__version__ = "0.1.0"
