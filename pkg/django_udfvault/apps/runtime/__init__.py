# Execution environment, lib API and sandbox for UDFs
