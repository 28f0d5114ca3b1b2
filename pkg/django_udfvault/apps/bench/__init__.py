# Storage comparison benchmark
