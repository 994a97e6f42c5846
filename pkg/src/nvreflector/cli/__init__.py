"""Command-line interface; see :mod:`nvreflector.cli.main`."""
