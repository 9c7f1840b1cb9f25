"""
Root exception for the simulator.

Each layer defines its own subclasses next to the code that raises them;
the CLI maps anything derived from QuenchError to the numeric-failure exit code.
"""


class QuenchError(Exception):
    """Base exception for numeric and topology failures"""
    pass
