"""Application package."""

