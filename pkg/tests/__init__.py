"""Tests for curvopt."""
