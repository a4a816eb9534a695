"""File formats: TensorFile containers, CSV import, run manifests and CSV reports."""
