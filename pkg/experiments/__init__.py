"""Synthetic data, corruption, metrics and the trial/sweep harness."""
