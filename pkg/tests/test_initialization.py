"""
Tests for starting-point schemes.
"""

import numpy as np
import pytest

from curvopt.errors import ConfigError
from curvopt.problems import InitScheme, initial_point


class TestParse:
    @pytest.mark.parametrize(
        "text,kind,scale",
        [
            ("zeros", "zeros", 1.0),
            ("Ones", "ones", 1.0),
            ("normal", "normal", 1.0),
            ("normalized_normal", "normalized", 1.0),
            ("scaled_normal(0.1)", "scaled", 0.1),
            ("scaled:2.5", "scaled", 2.5),
            ("scaled", "scaled", 0.25),
        ],
    )
    def test_accepted_forms(self, text, kind, scale):
        """Every documented spelling parses to its scheme and scale."""
        assert InitScheme.parse(text) == InitScheme(kind, scale)

    @pytest.mark.parametrize("text", ["uniform", "scaled(abc)", "zeros(1)"])
    def test_rejected_forms(self, text):
        """Unknown names and malformed scales raise ConfigError."""
        with pytest.raises(ConfigError):
            InitScheme.parse(text)

    def test_str_round_trip(self):
        """str() of a scheme parses back to the same scheme."""
        scheme = InitScheme.parse("scaled_normal(0.1)")
        assert InitScheme.parse(str(scheme)) == scheme


class TestInitialPoint:
    def test_zeros_and_ones(self):
        """Constant schemes fill the vector."""
        np.testing.assert_array_equal(initial_point("zeros", 3), np.zeros(3))
        np.testing.assert_array_equal(initial_point("ones", 3), np.ones(3))

    def test_normalized_has_unit_norm(self):
        """The normalized draw has unit Euclidean norm."""
        assert np.linalg.norm(initial_point("normalized", 50, seed=1)) == pytest.approx(1.0)

    def test_scaled_normal(self):
        """The scaled draw is the normal draw times the scale for the same seed."""
        base = initial_point("normal", 20, seed=4)
        np.testing.assert_allclose(initial_point("scaled:0.1", 20, seed=4), 0.1 * base)

    def test_seeded_draws_repeat(self):
        """A fixed seed repeats the draw."""
        np.testing.assert_array_equal(initial_point("normal", 5, seed=9), initial_point("normal", 5, seed=9))
