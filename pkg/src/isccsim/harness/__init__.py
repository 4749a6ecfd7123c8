"""Scenario configuration, sweep harness, and command-line entry points."""
