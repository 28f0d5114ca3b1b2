# Shared exceptions and configuration helpers
