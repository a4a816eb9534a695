"""Configuration package for the tensor completion toolkit."""
