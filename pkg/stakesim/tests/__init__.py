"""Test suites for stakesim."""
