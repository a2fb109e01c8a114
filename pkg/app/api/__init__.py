"""API router modules."""

