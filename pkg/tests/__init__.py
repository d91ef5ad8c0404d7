"""Test package for discrete-cmc."""
