"""
Test suite for phasequant.
"""
