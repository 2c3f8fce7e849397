"""Command-line front door for the membrane toolkit."""

from .app import build_parser, dispatch

__all__ = ["build_parser", "dispatch"]
