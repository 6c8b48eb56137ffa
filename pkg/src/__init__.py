"""Make `src` an importable package for tests and the `p2p-discovery` entry point.

Importing `src.config` or `src.discovery.*` from the repository root relies on this file.
"""
