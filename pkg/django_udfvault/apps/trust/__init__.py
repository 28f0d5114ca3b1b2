# Signing identity and trust profiles
