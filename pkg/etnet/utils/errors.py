from typing import Any, Dict, Optional


class EtNetError(Exception):
    """Base class for all errors raised by etnet"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        """Render the machine-parseable error payload"""
        return {
            "success": False,
            "error": self.message,
            "error_type": type(self).__name__,
            "details": self.details,
        }


class ShapeError(EtNetError):
    """Operand shapes do not conform"""

    def __init__(self, op: str, *shapes: Any):
        super().__init__(
            f"{op}: incompatible shapes {' and '.join(str(tuple(s)) for s in shapes)}",
            {"op": op, "shapes": [list(s) for s in shapes]},
        )


class MaskError(EtNetError):
    """SRNN mask violates w1(t) + w2(t) != 0 or the skip-length bound"""

    pass


class SeriesError(EtNetError):
    """Empty series or inconsistent lengths"""

    pass


class CovarianceError(EtNetError):
    """Covariance not factorizable even after regularization"""

    pass


class TrainingError(EtNetError):
    """Training aborted"""

    def __init__(self, message: str, epoch: int, branch: str):
        super().__init__(message, {"epoch": epoch, "branch": branch})
        self.epoch = epoch
        self.branch = branch


class DataFormatError(EtNetError):
    """Malformed or empty input file"""

    pass


class ConfigError(EtNetError):
    """Invalid configuration or generation spec"""

    pass


class ModelFormatError(EtNetError):
    """Model document is missing fields or has an unsupported version"""

    pass


class MetricError(EtNetError):
    """Metric undefined for the given input"""

    pass
