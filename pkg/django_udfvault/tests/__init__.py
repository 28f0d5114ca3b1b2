"""
Test suite for udfvault
"""
