"""Random linear network coding on single-source multicast DAGs."""

__version__ = "0.1.0"
