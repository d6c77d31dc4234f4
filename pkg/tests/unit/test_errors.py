"""
Unit tests for the error hierarchy.
"""

import pytest

from etnet.models import ErrorResponse
from etnet.utils.errors import (
    ConfigError,
    EtNetError,
    MetricError,
    ShapeError,
    TrainingError,
)

pytestmark = pytest.mark.unit


def test_to_dict_payload():
    """Test the machine-parseable error payload."""
    # Given
    error = ConfigError("bad value", {"field": "K"})

    # When
    payload = error.to_dict()

    # Then
    assert payload == {
        "success": False,
        "error": "bad value",
        "error_type": "ConfigError",
        "details": {"field": "K"},
    }
    assert ErrorResponse(**payload).error_type == "ConfigError"


def test_shape_error_message():
    """Test that shapes appear in the message and details."""
    error = ShapeError("matmul", (2, 3), (4, 5))
    assert str(error) == "matmul: incompatible shapes (2, 3) and (4, 5)"
    assert error.details == {"op": "matmul", "shapes": [[2, 3], [4, 5]]}


def test_training_error_fields():
    """Test epoch and branch on aborted training."""
    error = TrainingError("nan loss", 7, "d")
    assert (error.epoch, error.branch) == (7, "d")
    assert error.to_dict()["details"] == {"epoch": 7, "branch": "d"}


def test_hierarchy():
    """Test that every error shares the base class and empty details default."""
    error = MetricError("undefined")
    assert isinstance(error, EtNetError)
    assert error.details == {}
