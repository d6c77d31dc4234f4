"""Test suite for etnet."""
