"""Test package for the tensor completion toolkit."""
