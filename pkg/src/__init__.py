"""
falconerlab source modules
"""
