"""Unit tests for the dynbound package."""
