"""etnet: unsupervised similarity learning for event-triggered time series."""

__version__ = "1.0.0"
