"""Core settings, logging, and seeding."""
