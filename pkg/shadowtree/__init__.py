"""
shadowtree - construct and certify semigroups that approximate a group's critical exponent
"""

__version__ = "0.1.0"
