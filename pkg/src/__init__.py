# Depth-Weighted Likelihood Root Search
# Main package initialization
