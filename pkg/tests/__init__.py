"""
leadlag test suite

Unit tests per core module plus closed-loop, CLI and golden-run checks.
"""
