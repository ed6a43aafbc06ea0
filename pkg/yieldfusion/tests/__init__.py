"""
Test package for the yieldfusion CLI and services
"""
