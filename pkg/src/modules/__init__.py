# Depth-Weighted Likelihood Root Search
# Modules package initialization
