"""
Shared test data
"""
