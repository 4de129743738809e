"""
Tests for reeb-strip.
"""
