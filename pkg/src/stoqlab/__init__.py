"""Exact simulation of StoqMA and MA verifiers built from classical reversible circuits."""
__version__ = "0.1.0"
