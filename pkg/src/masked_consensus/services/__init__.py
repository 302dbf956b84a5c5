"""Graph, estimator, fleet and attack services."""
