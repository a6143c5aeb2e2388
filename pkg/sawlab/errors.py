"""Exception types raised across sawlab.

Errors are raised the same way everywhere: a message first, then the offending value,
e.g. ``raise ConfigError("threads must be positive", threads)``.
"""


class SawlabError(Exception):
    """Base class for every error the package raises on purpose."""


class ConfigError(SawlabError):
    pass


class GeometryError(SawlabError):
    pass


class CacheError(SawlabError):
    pass


class CapExceeded(SawlabError):
    """A problem size is above a configured cap (e.g. number of Grassmann sites)."""


class BudgetExceeded(SawlabError):
    """An enumeration visited more search-tree nodes than the configured budget.

    No partial result is ever returned alongside this error.
    """

    @property
    def budget(self) -> int:
        return self.args[1]
