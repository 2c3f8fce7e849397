"""Commands package for the membrane CLI."""

COMMANDS = [
    "cli.commands.simulate",
    "cli.commands.pde",
    "cli.commands.potential",
    "cli.commands.resolvent",
    "cli.commands.verify",
    "cli.commands.suite",
]

__all__ = ["COMMANDS"]
