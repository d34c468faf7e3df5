"""Covariate-adjusted Youden cut-point estimation package."""
