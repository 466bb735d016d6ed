# Timing-skew simulator tests
