# Utilities: run configuration, constants, errors and logging
