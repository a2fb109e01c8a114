"""Worker definitions."""

