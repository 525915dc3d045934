"""Cross-domain time-series anomaly detection with transfer learning and
pool-based active learning."""

__version__ = "0.1.0"

from .errors import ConfigError, CrossalError, DataError  # noqa: E402

__all__ = ["ConfigError", "CrossalError", "DataError", "__version__"]
