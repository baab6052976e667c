"""Tests for the pose affordance pipeline."""
