# Self-describing hierarchical container format (SDC1)
