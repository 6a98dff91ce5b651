"""Engines and plumbing of the coupler simulator, one service class per module."""
