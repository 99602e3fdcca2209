"""Unit and integration tests for HoloML."""
