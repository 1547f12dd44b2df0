"""Fractional heat kernel, evolution of integrable data and asymptotic checks."""

from .kernel import FracParams, KernelProfile, build_profile, explicit_profile, kernel_at

__all__ = ["FracParams", "KernelProfile", "build_profile", "explicit_profile", "kernel_at"]
__version__ = "0.1.0"
