"""Shared helpers used across services and commands."""
