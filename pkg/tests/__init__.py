"""
Test package for the first-order Bayesian optimization toolkit.
Slow regret anchors run only when FOBO_SLOW_TESTS is set.
"""
