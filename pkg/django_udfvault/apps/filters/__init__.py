# Per-chunk I/O filter pipeline
