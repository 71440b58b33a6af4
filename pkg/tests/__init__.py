"""Tests for the dynbound package."""
