"""Recursive reasoning engine, sliding window, and single-request baselines."""
